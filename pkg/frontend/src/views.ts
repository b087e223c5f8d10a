// Render models: pure functions from state to plain descriptors.
//
// The DOM layer maps these 1:1 onto elements, so ordering and content are
// testable without a browser.

import type { SessionViewState } from './state.js';
import type { Decision, InquiryTranscript } from './types.js';

export interface ResultCardModel {
  cardId: string;
  title: string;
  provenance: 'preliminary' | 'reranked' | 'final';
  insight: string | null;
  tags: string[];
  // hover breakdown; null until reranked data exists
  breakdown: { relevance: number; access: number; temporal: number; diversity: number; final: number } | null;
  similarity: { score: number | null; rationale: string; unassessed: boolean } | null;
  opened: boolean;
  canOpen: boolean;
  canInquire: boolean;
}

export interface QueryViewModel {
  phase: SessionViewState['phase'];
  statusLine: string;
  provideNothingCard: boolean;
  entryTagNames: string[];
  results: ResultCardModel[];
  error: string | null;
}

const STATUS: Record<SessionViewState['phase'], string> = {
  idle: 'Enter a problem to recall related insights.',
  searching: 'Searching…',
  preliminary: 'Quick keyword matches (deeper analysis running)…',
  reranked: 'Reranked — verifying similarity…',
  done: 'Done.',
  failed: 'The session failed.',
};

export function queryViewModel(state: SessionViewState): QueryViewModel {
  return {
    phase: state.phase,
    statusLine: STATUS[state.phase],
    provideNothingCard: state.phase === 'done' && state.provideNothing,
    entryTagNames: state.entryTags.map((t) => t.name),
    error: state.error,
    results: state.rows.map((row) => ({
      cardId: row.cardId,
      title: row.title,
      provenance: row.provenance,
      insight: row.result?.insight_text ?? null,
      tags: row.result?.tags ?? [],
      breakdown: row.result
        ? {
            relevance: row.result.relevance,
            access: row.result.access,
            temporal: row.result.temporal,
            diversity: row.result.diversity,
            final: row.result.final_score,
          }
        : null,
      similarity: row.assessment
        ? {
            score: row.assessment.score,
            rationale: row.assessment.rationale,
            unassessed: row.assessment.unassessed,
          }
        : null,
      opened: state.openedCards.includes(row.cardId),
      canOpen: row.provenance === 'final',
      canInquire: row.provenance === 'final',
    })),
  };
}

export interface DecisionRowModel {
  id: string;
  label: string;
  originBadge: 'llm' | 'fallback';
  actions: ['accept', 'modify', 'veto'];
}

export function decisionQueueModel(decisions: Decision[]): DecisionRowModel[] {
  return decisions.map((d) => {
    const target =
      d.outcome.kind === 'map'
        ? `map to ${d.outcome.tag_name ?? d.outcome.tag_id}`
        : d.outcome.kind === 'create'
          ? `create "${d.outcome.name}"${d.outcome.parent_id ? '' : ' under Uncategorized'}`
          : 'reject';
    return {
      id: d.id,
      label: `"${d.tag}" → ${target}`,
      originBadge: d.origin,
      actions: ['accept', 'modify', 'veto'],
    };
  });
}

export interface TranscriptModel {
  inquiryId: string;
  turns: { role: 'user' | 'tutor'; text: string }[];
}

export function transcriptModel(transcript: InquiryTranscript): TranscriptModel {
  return {
    inquiryId: transcript.inquiry_id,
    turns: transcript.turns.map((t) => ({ role: t.role, text: t.text })),
  };
}
