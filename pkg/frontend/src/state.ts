// Session view state: a pure reducer over the event stream.
//
// Two invariants the tests pin down:
//  - the rendered result order always equals the order in the latest
//    applied event's payload; the client never re-sorts locally;
//  - events apply strictly in seq order, so a duplicate or stale event
//    (reconnect replay) is a no-op.

import type {
  Assessment,
  FilterLevel,
  LearningMode,
  PreliminaryResult,
  RankedResult,
  SessionEvent,
} from './types.js';

export type Phase = 'idle' | 'searching' | 'preliminary' | 'reranked' | 'done' | 'failed';

export interface ResultRow {
  cardId: string;
  title: string;
  provenance: 'preliminary' | 'reranked' | 'final';
  result?: RankedResult;
  assessment?: Assessment;
}

export interface SessionViewState {
  sessionId: string | null;
  mode: LearningMode;
  filterLevel: FilterLevel;
  phase: Phase;
  lastSeq: number;
  rows: ResultRow[];
  entryTags: { tag_id: string; name: string; score: number }[];
  provideNothing: boolean;
  error: string | null;
  openedCards: string[];
}

export function initialState(
  mode: LearningMode = 'balanced',
  filterLevel: FilterLevel = 'strict',
): SessionViewState {
  return {
    sessionId: null,
    mode,
    filterLevel,
    phase: 'idle',
    lastSeq: -1,
    rows: [],
    entryTags: [],
    provideNothing: false,
    error: null,
    openedCards: [],
  };
}

export function startSession(state: SessionViewState, sessionId: string): SessionViewState {
  return {
    ...initialState(state.mode, state.filterLevel),
    sessionId,
    phase: 'searching',
  };
}

/** Apply one stream event; stale/duplicate seqs are ignored. */
export function applyEvent(state: SessionViewState, event: SessionEvent): SessionViewState {
  if (state.sessionId !== null && event.session_id !== state.sessionId) return state;
  if (event.seq <= state.lastSeq) return state;
  const next: SessionViewState = { ...state, lastSeq: event.seq };

  switch (event.kind) {
    case 'preliminary_results': {
      const results = event.payload.results as PreliminaryResult[];
      next.phase = 'preliminary';
      next.rows = results.map((r) => ({
        cardId: r.card_id,
        title: r.problem_excerpt,
        provenance: 'preliminary',
      }));
      return next;
    }
    case 'tags_resolved': {
      next.entryTags = (event.payload.entry_tags ?? []) as SessionViewState['entryTags'];
      return next;
    }
    case 'reranked_results': {
      const results = event.payload.results as RankedResult[];
      next.phase = 'reranked';
      next.rows = results.map((r) => ({
        cardId: r.card_id,
        title: r.problem_excerpt,
        provenance: 'reranked',
        result: r,
      }));
      return next;
    }
    case 'assessments_ready': {
      const byCard = new Map(
        (event.payload.assessments as Assessment[]).map((a) => [a.card_id, a]),
      );
      next.rows = state.rows.map((row) => ({
        ...row,
        assessment: byCard.get(row.cardId) ?? row.assessment,
      }));
      return next;
    }
    case 'final_results': {
      const results = event.payload.results as RankedResult[];
      next.phase = 'done';
      next.provideNothing = Boolean(event.payload.provide_nothing);
      next.rows = results.map((r) => ({
        cardId: r.card_id,
        title: r.problem_excerpt,
        provenance: 'final',
        result: r,
        assessment: r.unassessed
          ? { card_id: r.card_id, score: null, rationale: '', unassessed: true }
          : {
              card_id: r.card_id,
              score: r.similarity_score ?? null,
              rationale: r.similarity_rationale ?? '',
              unassessed: false,
            },
      }));
      return next;
    }
    case 'error': {
      next.phase = 'failed';
      next.error = String(event.payload.message ?? 'session failed');
      return next;
    }
  }
}

export function markOpened(state: SessionViewState, cardId: string): SessionViewState {
  if (state.openedCards.includes(cardId)) return state;
  return { ...state, openedCards: [...state.openedCards, cardId] };
}
