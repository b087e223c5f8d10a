// Page wiring: form + selectors, the event-stream subscription with
// resume-on-disconnect, the decision queue, and the inquiry panel.

import { ApiError, IrecClient } from './api.js';
import { renderDecisionQueue, renderQueryView, renderTranscript } from './dom.js';
import { applyEvent, initialState, markOpened, startSession, type SessionViewState } from './state.js';
import type { FilterLevel, InquiryTranscript, LearningMode } from './types.js';
import { decisionQueueModel, queryViewModel, transcriptModel } from './views.js';

const apiBase = new URLSearchParams(location.search).get('api') ?? '';
const client = new IrecClient(apiBase);

const resultsRoot = document.getElementById('results')!;
const decisionsRoot = document.getElementById('decisions')!;
const inquiryRoot = document.getElementById('inquiry')!;
const queryForm = document.getElementById('query-form') as HTMLFormElement;
const queryInput = document.getElementById('query-input') as HTMLTextAreaElement;
const modeSelect = document.getElementById('mode-select') as HTMLSelectElement;
const filterSelect = document.getElementById('filter-select') as HTMLSelectElement;
const inquiryForm = document.getElementById('inquiry-form') as HTMLFormElement;
const inquiryInput = document.getElementById('inquiry-input') as HTMLInputElement;

let state: SessionViewState = initialState();
let transcript: InquiryTranscript | null = null;
let inquiryBanner: string | null = null;
let lastQueryText = '';

function redraw(): void {
  renderQueryView(resultsRoot, queryViewModel(state), {
    onOpen: (cardId) => {
      if (!state.sessionId) return;
      client
        .openResult(state.sessionId, cardId)
        .then(() => {
          state = markOpened(state, cardId);
          redraw();
        })
        .catch(showError);
    },
    onInquire: (cardId) => {
      client
        .openInquiry(cardId, undefined, lastQueryText)
        .then((t) => {
          transcript = t;
          inquiryBanner = null;
          redraw();
        })
        .catch(showError);
    },
  });
  renderTranscript(inquiryRoot, transcript ? transcriptModel(transcript) : null, inquiryBanner);
}

function showError(err: unknown): void {
  state = { ...state, error: err instanceof Error ? err.message : String(err) };
  redraw();
}

async function subscribe(sessionId: string): Promise<void> {
  // Resume from the last applied seq on connection loss; the reducer drops
  // any replayed duplicates.
  for (;;) {
    try {
      for await (const event of client.streamEvents(sessionId, state.lastSeq)) {
        if (state.sessionId !== sessionId) return; // superseded by a new query
        state = applyEvent(state, event);
        redraw();
      }
      return;
    } catch (err) {
      if (state.sessionId !== sessionId) return;
      if (state.phase === 'done' || state.phase === 'failed') return;
      await new Promise((resolve) => setTimeout(resolve, 500));
    }
  }
}

queryForm.addEventListener('submit', (e) => {
  e.preventDefault();
  const text = queryInput.value.trim();
  if (!text) return;
  lastQueryText = text;
  const mode = modeSelect.value as LearningMode;
  const filterLevel = filterSelect.value as FilterLevel;
  state = { ...state, mode, filterLevel };
  client
    .submitQuery(text, mode, filterLevel)
    .then(({ session_id }) => {
      state = startSession(state, session_id);
      redraw();
      void subscribe(session_id);
    })
    .catch(showError);
});

async function refreshDecisions(): Promise<void> {
  try {
    const { decisions } = await client.pendingDecisions();
    renderDecisionQueue(decisionsRoot, decisionQueueModel(decisions), {
      onAction: (id, action) => {
        client.confirmDecision(id, action).then(refreshDecisions).catch(showError);
      },
      onModify: (id) => {
        const name = prompt('New tag name to create:');
        if (!name) return;
        client
          .confirmDecision(id, 'modify', { kind: 'create', tag_id: null, parent_id: null, name })
          .then(refreshDecisions)
          .catch(showError);
      },
    });
  } catch (err) {
    if (!(err instanceof ApiError)) throw err;
  }
}

inquiryForm.addEventListener('submit', (e) => {
  e.preventDefault();
  const text = inquiryInput.value.trim();
  if (!text || !transcript) return;
  inquiryInput.value = '';
  client
    .sendInquiryTurn(transcript.inquiry_id, text)
    .then((t) => {
      transcript = t;
      inquiryBanner = null;
      redraw();
    })
    .catch((err) => {
      // Provider hiccups must not eat the transcript; keep it and banner the error.
      inquiryBanner = err instanceof Error ? err.message : String(err);
      redraw();
    });
});

redraw();
void refreshDecisions();
setInterval(() => void refreshDecisions(), 4000);
