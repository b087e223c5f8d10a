// DOM bindings: map render models onto elements. No decisions live here.

import type { DecisionRowModel, QueryViewModel, TranscriptModel } from './views.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface ResultHandlers {
  onOpen: (cardId: string) => void;
  onInquire: (cardId: string) => void;
}

export function renderQueryView(
  root: HTMLElement,
  model: QueryViewModel,
  handlers: ResultHandlers,
): void {
  root.replaceChildren();
  const status = el('p', 'status', model.statusLine);
  root.append(status);
  if (model.error) {
    root.append(el('p', 'error-banner', model.error));
  }
  if (model.entryTagNames.length > 0) {
    root.append(el('p', 'entry-tags', `entry tags: ${model.entryTagNames.join(', ')}`));
  }
  if (model.provideNothingCard) {
    const nothing = el('div', 'card provide-nothing');
    nothing.append(
      el('h3', undefined, 'No relevant insight'),
      el('p', undefined, 'Nothing in your history cleared the similarity filter for this problem — a fresh start, on purpose.'),
    );
    root.append(nothing);
    return;
  }
  const list = el('ol', 'results');
  for (const result of model.results) {
    const item = el('li', `card result ${result.provenance}${result.opened ? ' opened' : ''}`);
    item.dataset.cardId = result.cardId;
    item.append(el('h3', undefined, result.title));
    item.append(el('span', 'provenance-badge', result.provenance));
    if (result.similarity && !result.similarity.unassessed && result.similarity.score !== null) {
      item.append(el('span', 'similarity', `similarity ${result.similarity.score}`));
    } else if (result.similarity?.unassessed) {
      item.append(el('span', 'similarity unassessed', 'unassessed'));
    }
    if (result.insight) {
      const insight = el('p', 'insight', result.insight);
      item.append(insight);
    }
    if (result.tags.length > 0) {
      const tags = el('p', 'tags');
      for (const t of result.tags) tags.append(el('span', 'tag-chip', t));
      item.append(tags);
    }
    if (result.breakdown) {
      const b = result.breakdown;
      item.title =
        `R=${b.relevance.toFixed(3)}  A=${b.access.toFixed(3)}  ` +
        `T=${b.temporal.toFixed(3)}  D=${b.diversity.toFixed(3)}  S=${b.final.toFixed(3)}`;
    }
    if (result.canOpen && !result.opened) {
      const open = el('button', 'open-btn', 'Open insight');
      open.addEventListener('click', () => handlers.onOpen(result.cardId));
      item.append(open);
    }
    if (result.canInquire) {
      const inquire = el('button', 'inquire-btn', 'Explore with tutor');
      inquire.addEventListener('click', () => handlers.onInquire(result.cardId));
      item.append(inquire);
    }
    list.append(item);
  }
  root.append(list);
}

export interface DecisionHandlers {
  onAction: (decisionId: string, action: 'accept' | 'veto') => void;
  onModify: (decisionId: string) => void;
}

export function renderDecisionQueue(
  root: HTMLElement,
  rows: DecisionRowModel[],
  handlers: DecisionHandlers,
): void {
  root.replaceChildren();
  if (rows.length === 0) {
    root.append(el('p', 'empty', 'No pending tag decisions.'));
    return;
  }
  const list = el('ul', 'decisions');
  for (const row of rows) {
    const item = el('li', 'decision');
    item.dataset.decisionId = row.id;
    item.append(el('span', `origin ${row.originBadge}`, row.originBadge));
    item.append(el('span', 'label', row.label));
    const accept = el('button', 'accept', 'Accept');
    accept.addEventListener('click', () => handlers.onAction(row.id, 'accept'));
    const modify = el('button', 'modify', 'Modify…');
    modify.addEventListener('click', () => handlers.onModify(row.id));
    const veto = el('button', 'veto', 'Veto');
    veto.addEventListener('click', () => handlers.onAction(row.id, 'veto'));
    item.append(accept, modify, veto);
    list.append(item);
  }
  root.append(list);
}

export function renderTranscript(
  root: HTMLElement,
  model: TranscriptModel | null,
  banner: string | null,
): void {
  root.replaceChildren();
  if (!model) {
    root.append(el('p', 'empty', 'Open an inquiry from a result card.'));
    return;
  }
  if (banner) root.append(el('p', 'error-banner', banner));
  const list = el('div', 'transcript');
  for (const turn of model.turns) {
    const bubble = el('div', `turn ${turn.role}`, turn.text);
    list.append(bubble);
  }
  root.append(list);
}
