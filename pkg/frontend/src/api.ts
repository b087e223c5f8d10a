// Typed client for the backend HTTP API. The UI goes through this module
// exclusively; there is no other channel to the store.

import { readSseFrames } from './sse.js';
import type {
  CaptureResponse,
  Decision,
  DecisionOutcome,
  FilterLevel,
  InquiryTranscript,
  LearningMode,
  SessionEvent,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class IrecClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchFn(this.url(path), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    }).then((r) => asJson<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.url(path)).then((r) => asJson<T>(r));
  }

  submitQuery(query: string, mode: LearningMode, filterLevel: FilterLevel) {
    // The selections round-trip exactly as selected; no client-side defaults.
    return this.post<{ session_id: string }>('/query', {
      query,
      mode,
      filter_level: filterLevel,
    });
  }

  /**
   * Stream a session's events after `afterSeq`, in order. Ends when the
   * terminal event has been delivered (or the server closes the stream).
   */
  async *streamEvents(sessionId: string, afterSeq = -1): AsyncGenerator<SessionEvent> {
    const resp = await this.fetchFn(
      this.url(`/sessions/${sessionId}/events?after=${afterSeq}&stream=true`),
      { headers: { accept: 'text/event-stream' } },
    );
    if (!resp.ok || !resp.body) {
      throw new ApiError(resp.status, `event stream unavailable for ${sessionId}`);
    }
    for await (const frame of readSseFrames(resp.body)) {
      const event = JSON.parse(frame.data) as SessionEvent;
      yield event;
      if (event.kind === 'final_results' || event.kind === 'error') return;
    }
  }

  pollEvents(sessionId: string, afterSeq = -1) {
    return this.get<{ session_id: string; state: string; events: SessionEvent[] }>(
      `/sessions/${sessionId}/events?after=${afterSeq}&stream=false`,
    );
  }

  openResult(sessionId: string, cardId: string) {
    return this.post<{ card_id: string; access_count: number }>(
      `/sessions/${sessionId}/open`,
      { card_id: cardId },
    );
  }

  captureNote(note: string) {
    return this.post<CaptureResponse>('/insights', { note });
  }

  pendingDecisions() {
    return this.get<{ decisions: Decision[] }>('/decisions?pending=true');
  }

  confirmDecision(
    decisionId: string,
    action: 'accept' | 'veto' | 'modify',
    outcome?: Pick<DecisionOutcome, 'kind' | 'tag_id' | 'parent_id' | 'name'>,
  ) {
    const body: Record<string, unknown> = { action };
    if (outcome) body.outcome = outcome;
    return this.post<Decision>(`/decisions/${decisionId}`, body);
  }

  openInquiry(cardId: string, problemId?: string, problemText?: string) {
    return this.post<InquiryTranscript>('/inquiry', {
      card_id: cardId,
      problem_id: problemId ?? null,
      problem_text: problemText ?? null,
    });
  }

  sendInquiryTurn(inquiryId: string, text: string) {
    return this.post<InquiryTranscript>(`/inquiry/${inquiryId}/turns`, { text });
  }

  sessionLog(sessionId: string) {
    return this.get<{ steps: { step_name: string; duration_ms: number; detail: string }[] }>(
      `/sessions/${sessionId}/log`,
    );
  }
}
