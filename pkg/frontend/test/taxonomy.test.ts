import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import {
  addLabel,
  canSubmit,
  initTaxonomyEditor,
  removeLabel,
  renameLabel,
} from '../src/views.js';
import type { TaxonomyResponse } from '../src/types.js';
import taxonomyFixture from './fixtures/taxonomy.json';

const taxonomy = taxonomyFixture as TaxonomyResponse;

describe('taxonomy editor', () => {
  it('starts clean from the API response', () => {
    const state = initTaxonomyEditor(taxonomy, true);
    expect(state.labels.map((l) => l.name)).toEqual(taxonomy.labels.map((l) => l.name));
    expect(state.dirty).toBe(false);
    expect(canSubmit(state)).toBe(false);
  });

  it('is hidden for non-admin viewers', () => {
    expect(initTaxonomyEditor(taxonomy, false).visible).toBe(false);
  });

  it('adding a new label enables submit', () => {
    const state = addLabel(initTaxonomyEditor(taxonomy, true), 'Accessibility');
    expect(state.errors).toEqual({});
    expect(canSubmit(state)).toBe(true);
  });

  it('a duplicate name is an inline error and blocks submit', () => {
    const state = addLabel(initTaxonomyEditor(taxonomy, true), 'Pain Points');
    const index = state.labels.length - 1;
    expect(state.errors[index]).toContain('duplicate');
    expect(canSubmit(state)).toBe(false);
  });

  it('renaming away the duplicate clears the error', () => {
    let state = addLabel(initTaxonomyEditor(taxonomy, true), 'Pain Points');
    state = renameLabel(state, state.labels.length - 1, 'Accessibility');
    expect(state.errors).toEqual({});
    expect(canSubmit(state)).toBe(true);
  });

  it('removing every label blocks submit', () => {
    let state = initTaxonomyEditor(taxonomy, true);
    while (state.labels.length > 0) state = removeLabel(state, 0);
    expect(canSubmit(state)).toBe(false);
  });

  it('submit sends the edited labels and surfaces the new version', async () => {
    const calls: { url: string; body: unknown }[] = [];
    const client = new ApiClient({
      baseUrl: 'http://test',
      adminKey: 'admin-key',
      fetchImpl: async (url, init) => {
        calls.push({ url, body: JSON.parse(init!.body!) });
        return { status: 200, json: async () => ({ version: taxonomy.version + 1 }) };
      },
    });
    const state = addLabel(initTaxonomyEditor(taxonomy, true), 'Accessibility');
    const result = await client.putTaxonomy(state.labels);
    expect(result.version).toBe(taxonomy.version + 1);
    expect(calls[0]!.url).toBe('http://test/v1/taxonomy');
    expect((calls[0]!.body as { labels: { name: string }[] }).labels.map((l) => l.name)).toContain(
      'Accessibility',
    );
  });
});
