// The spec'd concurrency model: one live subscription per viewed session,
// with all UI state updates serialized through a single queue.

export class UiQueue {
  private chain: Promise<void> = Promise.resolve();

  push(task: () => void | Promise<void>): Promise<void> {
    this.chain = this.chain.then(task);
    return this.chain;
  }

  /** Resolves once every task pushed so far has run. */
  drain(): Promise<void> {
    return this.chain;
  }
}
