import {
  dislikeFeatureUtterance,
  dislikeItemUtterance,
  featureLabel,
  likeFeatureUtterance,
  likeItemUtterance,
  QUICK_REPLIES,
  whyUtterance,
} from './transcript';
import type {
  ExplanationPayload,
  ProfilePayload,
  RecListPayload,
  Turn,
} from './types';

export type SendFn = (text: string) => void;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function actionButton(label: string, utterance: string, send: SendFn, className = 'chip') {
  const button = el('button', className, label);
  button.type = 'button';
  button.dataset.utterance = utterance;
  button.addEventListener('click', () => send(utterance));
  return button;
}

function renderRecList(payload: RecListPayload, send: SendFn): HTMLElement {
  const wrap = el('div', 'cards');
  payload.items.forEach((card, index) => {
    const rank = index + 1;
    const node = el('div', 'card');
    node.dataset.testid = 'rec-card';
    node.dataset.itemId = card.item_id;

    const head = el('div', 'card-head');
    head.appendChild(el('span', 'card-rank', `${rank}.`));
    head.appendChild(el('span', 'card-title', card.title));
    head.appendChild(el('span', 'card-score', card.final_score.toFixed(2)));
    node.appendChild(head);

    const chips = el('div', 'card-chips');
    for (const feature of card.explanation.features) {
      const chip = el('span', 'feature-chip', featureLabel(feature.feature));
      chip.appendChild(actionButton('+', likeFeatureUtterance(feature.feature), send, 'chip like'));
      chip.appendChild(actionButton('-', dislikeFeatureUtterance(feature.feature), send, 'chip dislike'));
      chips.appendChild(chip);
    }
    node.appendChild(chips);

    const actions = el('div', 'card-actions');
    actions.appendChild(actionButton('why?', whyUtterance(rank), send, 'chip why'));
    actions.appendChild(actionButton('like', likeItemUtterance(rank), send, 'chip like'));
    actions.appendChild(actionButton('dislike', dislikeItemUtterance(rank), send, 'chip dislike'));
    node.appendChild(actions);

    wrap.appendChild(node);
  });
  if (payload.question) {
    wrap.appendChild(renderQuickReplies(send));
  }
  return wrap;
}

function renderQuickReplies(send: SendFn): HTMLElement {
  const row = el('div', 'quick-replies');
  row.dataset.testid = 'quick-replies';
  for (const qr of QUICK_REPLIES) {
    row.appendChild(actionButton(qr.label, qr.text, send, 'chip quick-reply'));
  }
  return row;
}

function renderExplanation(payload: ExplanationPayload): HTMLElement {
  const list = el('ul', 'explanation');
  list.dataset.testid = 'explanation';
  for (const feature of payload.features) {
    const item = el('li', 'explanation-feature', featureLabel(feature.feature));
    item.dataset.feature = feature.feature;
    item.appendChild(el('span', 'explanation-score', ` ${feature.score.toFixed(4)}`));
    list.appendChild(item);
  }
  return list;
}

function renderProfile(payload: ProfilePayload): HTMLElement {
  const wrap = el('div', 'profile');
  wrap.dataset.testid = 'profile';
  for (const entry of payload.entries) {
    const row = el('div', 'profile-row');
    row.appendChild(el('span', 'profile-feature', featureLabel(entry.feature)));
    const bar = el('div', entry.weight >= 0 ? 'bar positive' : 'bar negative');
    bar.style.width = `${Math.round(Math.abs(entry.weight) * 100)}px`;
    bar.title = `${entry.weight.toFixed(2)} (${entry.source})`;
    row.appendChild(bar);
    row.appendChild(el('span', 'profile-source', entry.source));
    wrap.appendChild(row);
  }
  return wrap;
}

export function renderTurn(turn: Turn, send: SendFn): HTMLElement {
  const node = el('div', `turn ${turn.author}`);
  node.dataset.testid = `turn-${turn.author}`;
  const bubble = el('div', 'bubble');
  for (const line of turn.text.split('\n')) {
    bubble.appendChild(el('div', 'line', line));
  }
  node.appendChild(bubble);
  if (turn.payloadType === 'rec_list' && turn.payload) {
    node.appendChild(renderRecList(turn.payload as RecListPayload, send));
  } else if (turn.payloadType === 'explanation' && turn.payload) {
    node.appendChild(renderExplanation(turn.payload as ExplanationPayload));
  } else if (turn.payloadType === 'profile' && turn.payload) {
    node.appendChild(renderProfile(turn.payload as ProfilePayload));
  } else if (turn.payloadType === 'question') {
    node.appendChild(renderQuickReplies(send));
  }
  return node;
}
