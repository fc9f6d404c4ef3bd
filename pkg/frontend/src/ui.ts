/**
 * DOM rendering: wipe and rebuild the chat from state on every change.
 * Rebuilding keeps the view a pure function of the state object; at this
 * page size there is nothing to gain from diffing.
 */

import type { Card } from "./api.js";
import {
  ChatState,
  ChatTurn,
  RESPONSE_KEY,
  Verdict,
  canSubmit,
  hasPendingTurn,
} from "./state.js";

export interface Handlers {
  onSubmit(text: string): void;
  onFeedback(turnIndex: number, key: string, itemId: string | null, clicked: Verdict): void;
  onRetry(text: string): void;
}

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

function thumbRow(
  turnIndex: number,
  turn: ChatTurn,
  key: string,
  itemId: string | null,
  handlers: Handlers,
): HTMLElement {
  const row = el("div", "thumbs");
  const mark = turn.feedback[key];
  for (const verdict of ["up", "down"] as Verdict[]) {
    const active = mark && mark.verdict === verdict;
    const button = el("button", `thumb${active ? " active" : ""}`, verdict === "up" ? "👍" : "👎");
    button.type = "button";
    button.setAttribute("aria-label", `thumbs ${verdict}`);
    button.addEventListener("click", () => handlers.onFeedback(turnIndex, key, itemId, verdict));
    row.appendChild(button);
  }
  if (mark) {
    const badge = el(
      "span",
      `badge ${mark.status}`,
      mark.status === "accepted" ? "saved" : "not saved - server error",
    );
    row.appendChild(badge);
  }
  return row;
}

function cardNode(turnIndex: number, turn: ChatTurn, card: Card, handlers: Handlers): HTMLElement {
  const node = el("div", "card");
  node.appendChild(el("div", "card-name", card.name));
  node.appendChild(el("div", "card-genre", card.genre));
  node.appendChild(el("p", "card-description", card.description));
  node.appendChild(thumbRow(turnIndex, turn, card.id, card.id, handlers));
  return node;
}

function turnNode(turnIndex: number, turn: ChatTurn, handlers: Handlers): HTMLElement {
  const node = el("div", `turn ${turn.role}${turn.pending ? " pending" : ""}`);
  const bubble = el("div", "bubble");
  bubble.appendChild(el("p", "turn-text", turn.text));

  if (turn.pending) {
    bubble.appendChild(el("span", "spinner"));
  }
  if (turn.error && turn.retryText) {
    const retry = el("button", "retry", "Try again");
    retry.type = "button";
    const text = turn.retryText;
    retry.addEventListener("click", () => handlers.onRetry(text));
    bubble.appendChild(retry);
  }
  if (turn.items && turn.items.length > 0) {
    const cards = el("div", "cards");
    for (const card of turn.items) {
      cards.appendChild(cardNode(turnIndex, turn, card, handlers));
    }
    bubble.appendChild(cards);
    bubble.appendChild(thumbRow(turnIndex, turn, RESPONSE_KEY, null, handlers));
  }
  node.appendChild(bubble);
  return node;
}

export function render(root: HTMLElement, state: ChatState, handlers: Handlers): void {
  root.replaceChildren();

  const log = el("div", "chat-log");
  state.turns.forEach((turn, index) => log.appendChild(turnNode(index, turn, handlers)));
  root.appendChild(log);

  const form = el("form", "composer");
  const input = el("input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "e.g. games like doors but less scary, on tablet";
  input.autocomplete = "off";
  const send = el("button", "send", "Send") as HTMLButtonElement;
  send.type = "submit";

  const sync = () => {
    send.disabled = !canSubmit(state, input.value);
  };
  input.addEventListener("input", sync);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (canSubmit(state, input.value)) {
      handlers.onSubmit(input.value);
    }
  });
  form.appendChild(input);
  form.appendChild(send);
  root.appendChild(form);

  sync();
  if (!hasPendingTurn(state)) {
    input.focus();
  }
  log.scrollTop = log.scrollHeight;
}
