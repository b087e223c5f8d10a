// A recorded session stream: the shape the backend emits for a two-card
// corpus where one result survives the strict filter.

import type { Decision, InquiryTranscript, RankedResult, SessionEvent } from '../../src/types.js';

export function rankedResult(cardId: string, overrides: Partial<RankedResult> = {}): RankedResult {
  return {
    card_id: cardId,
    relevance: 0.8,
    access: 0.0,
    temporal: 1.0,
    diversity: 0.5,
    final_score: 0.68,
    mode: 'balanced',
    paths: ['vector', 'fulltext'],
    problem_excerpt: `problem ${cardId}`,
    problem_text: `problem ${cardId} full text`,
    insight_text: `insight for ${cardId}`,
    access_count: 0,
    tags: ['Calculus'],
    similarity_score: 1,
    similarity_rationale: 'same method',
    unassessed: false,
    ...overrides,
  };
}

export type ScriptedEvent = Omit<SessionEvent, 'session_id'>;

export const RECORDED_STREAM: ScriptedEvent[] = [
  {
    seq: 0,
    kind: 'preliminary_results',
    emitted_at: 1,
    payload: {
      results: [
        { card_id: 'c2', score: 3.2, problem_excerpt: 'problem c2' },
        { card_id: 'c1', score: 2.9, problem_excerpt: 'problem c1' },
      ],
    },
  },
  {
    seq: 1,
    kind: 'tags_resolved',
    emitted_at: 2,
    payload: {
      entry_tags: [{ tag_id: 't1', name: 'Calculus', score: 1.0, matched_by: 'tokens' }],
      tag_hits: 2,
    },
  },
  {
    seq: 2,
    kind: 'reranked_results',
    emitted_at: 3,
    payload: {
      results: [rankedResult('c1'), rankedResult('c2', { final_score: 0.44, relevance: 0.3 })],
    },
  },
  {
    seq: 3,
    kind: 'assessments_ready',
    emitted_at: 4,
    payload: {
      assessments: [
        { card_id: 'c1', score: 1, rationale: 'same method', unassessed: false },
        { card_id: 'c2', score: 3, rationale: 'different method', unassessed: false },
      ],
    },
  },
  {
    seq: 4,
    kind: 'final_results',
    emitted_at: 5,
    payload: {
      provide_nothing: false,
      results: [rankedResult('c1')],
    },
  },
];

export const PROVIDE_NOTHING_STREAM: ScriptedEvent[] = [
  RECORDED_STREAM[0]!,
  RECORDED_STREAM[1]!,
  RECORDED_STREAM[2]!,
  {
    seq: 3,
    kind: 'assessments_ready',
    emitted_at: 4,
    payload: {
      assessments: [
        { card_id: 'c1', score: 3, rationale: 'different', unassessed: false },
        { card_id: 'c2', score: 3, rationale: 'different', unassessed: false },
      ],
    },
  },
  {
    seq: 4,
    kind: 'final_results',
    emitted_at: 5,
    payload: { provide_nothing: true, results: [] },
  },
];

export function pendingDecision(id: string, overrides: Partial<Decision> = {}): Decision {
  return {
    id,
    tag: 'u-substitution',
    card_id: 'c1',
    outcome: { kind: 'create', tag_id: null, parent_id: 'calc', name: 'U-Substitution Method' },
    origin: 'llm',
    confirmed: false,
    status: 'pending',
    applied_tag_id: null,
    ...overrides,
  };
}

export function transcriptFixture(): InquiryTranscript {
  return {
    inquiry_id: 'inq-1',
    problem_ref: 'inline',
    card_id: 'c1',
    turns: [
      {
        role: 'tutor',
        text: 'You once wrote that one part is the derivative of the other. Where is that here?',
        context_refs: ['inline', 'c1'],
      },
    ],
  };
}
