import type { Card, CompareMode, ConferenceHit, Filters } from './api.js';

/** Graph panel state; present only while a card's comparison is open. */
export interface GraphViewState {
  productId: string;
  productTitle: string;
  mode: CompareMode;
  minWeight: number;
}

export interface UiState {
  conference: ConferenceHit | null;
  filters: Filters;
  cards: Card[];
  /** Query string of the last recommendations request actually sent. */
  lastRequest: string | null;
  graph: GraphViewState | null;
}

export const DEFAULT_LIMIT = 20;

export function initialState(): UiState {
  return {
    conference: null,
    filters: {
      kinds: ['book', 'journal_year', 'conference_series'],
      from_year: null,
      to_year: null,
      limit: DEFAULT_LIMIT,
      person: '',
    },
    cards: [],
    lastRequest: null,
    graph: null,
  };
}
