// Payload shapes of the backend HTTP API.

export type EventKind =
  | 'preliminary_results'
  | 'tags_resolved'
  | 'reranked_results'
  | 'assessments_ready'
  | 'final_results'
  | 'error';

export interface SessionEvent {
  session_id: string;
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
  emitted_at: number;
}

export interface PreliminaryResult {
  card_id: string;
  score: number;
  problem_excerpt: string;
}

export interface RankedResult {
  card_id: string;
  relevance: number;
  access: number;
  temporal: number;
  diversity: number;
  final_score: number;
  mode: string;
  paths: string[];
  problem_excerpt: string;
  problem_text: string;
  insight_text: string;
  access_count: number;
  tags: string[];
  similarity_score?: number | null;
  similarity_rationale?: string;
  unassessed?: boolean;
}

export interface Assessment {
  card_id: string;
  score: number | null;
  rationale: string;
  unassessed: boolean;
}

export type LearningMode = 'learning' | 'review' | 'balanced';
export type FilterLevel = 'strict' | 'loose';

export interface DecisionOutcome {
  kind: 'map' | 'create' | 'rejected';
  tag_id: string | null;
  parent_id: string | null;
  name: string | null;
  tag_name?: string;
}

export interface Decision {
  id: string;
  tag: string;
  card_id: string;
  outcome: DecisionOutcome;
  origin: 'llm' | 'fallback';
  confirmed: boolean;
  status: string;
  applied_tag_id: string | null;
}

export interface InquiryTurn {
  role: 'user' | 'tutor';
  text: string;
  context_refs: [string, string];
}

export interface InquiryTranscript {
  inquiry_id: string;
  problem_ref: string;
  card_id: string;
  turns: InquiryTurn[];
}

export interface CaptureResponse {
  card_id: string;
  problem: string;
  insight: string;
  suggested_tags: string[];
  needs_completion: boolean;
  pending_decisions: Decision[];
}
