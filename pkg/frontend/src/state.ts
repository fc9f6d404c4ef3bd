/**
 * Pure chat state. The DOM is always a function of this state and nothing
 * else, so every transition is a plain function from state to state and the
 * whole UI can be reconstructed (and tested) from the turn list alone.
 *
 * Invariants kept here:
 *  - at most one pending turn at a time (one in-flight recommendation);
 *  - cards only ever appear on system turns;
 *  - a feedback mark exists only after the server acknowledged or refused
 *    the event, so every mark corresponds to a visible indicator.
 */

import type { Card } from "./api.js";

export type Verdict = "up" | "down";
export type FeedbackStatus = "accepted" | "failed";

/** Key for whole-response feedback marks (item feedback keys are item ids). */
export const RESPONSE_KEY = "__response__";

export interface FeedbackMark {
  verdict: Verdict;
  status: FeedbackStatus;
}

export interface ChatTurn {
  role: "user" | "system";
  text: string;
  items?: Card[];
  pending: boolean;
  error?: boolean;
  retryText?: string;
  feedback: Record<string, FeedbackMark>;
}

export interface ChatState {
  sessionId: string;
  turns: ChatTurn[];
}

export const GREETING =
  "Hi! Tell me what you feel like playing - name games you like or dislike, " +
  "genres, devices, who you play with - and I will suggest something.";

function turn(partial: Partial<ChatTurn> & Pick<ChatTurn, "role" | "text">): ChatTurn {
  return { pending: false, feedback: {}, ...partial };
}

export function initialState(sessionId: string): ChatState {
  return {
    sessionId,
    turns: [turn({ role: "system", text: GREETING })],
  };
}

export function hasPendingTurn(state: ChatState): boolean {
  return state.turns.some((t) => t.pending);
}

export function canSubmit(state: ChatState, text: string): boolean {
  return text.trim().length > 0 && !hasPendingTurn(state);
}

/** Append the user turn plus the pending system turn (the spinner). */
export function beginRequest(state: ChatState, text: string): ChatState {
  const trimmed = text.trim();
  if (!canSubmit(state, trimmed)) {
    return state;
  }
  return {
    ...state,
    turns: [
      ...state.turns,
      turn({ role: "user", text: trimmed }),
      turn({ role: "system", text: "Looking for games...", pending: true }),
    ],
  };
}

function replacePending(state: ChatState, replacement: ChatTurn): ChatState {
  const index = state.turns.findIndex((t) => t.pending);
  if (index < 0) {
    return state;
  }
  const turns = state.turns.slice();
  turns[index] = replacement;
  return { ...state, turns };
}

export function completeRequest(state: ChatState, cards: Card[], requestText: string): ChatState {
  const text = cards.length
    ? "Here is what I found - tell me what you think!"
    : "I could not find anything for that, sorry. Try describing it differently?";
  return replacePending(
    state,
    turn({ role: "system", text, items: cards, retryText: requestText }),
  );
}

/** 5xx / network failure: an apology turn that offers a retry. */
export function failRequest(state: ChatState, requestText: string): ChatState {
  return replacePending(
    state,
    turn({
      role: "system",
      text: "Sorry, something went wrong while fetching recommendations.",
      error: true,
      retryText: requestText,
    }),
  );
}

/**
 * Next verdict for a click on `clicked`: a click on the already-active
 * thumb is a no-op (returns null, nothing is posted); any other click
 * yields a postable verdict.
 */
export function nextVerdict(current: FeedbackMark | undefined, clicked: Verdict): Verdict | null {
  if (current && current.status === "accepted" && current.verdict === clicked) {
    return null;
  }
  return clicked;
}

/** Record the server's answer for a feedback event (ack or refusal). */
export function markFeedback(
  state: ChatState,
  turnIndex: number,
  key: string,
  verdict: Verdict,
  status: FeedbackStatus,
): ChatState {
  const existing = state.turns[turnIndex];
  if (!existing || existing.role !== "system") {
    return state;
  }
  const turns = state.turns.slice();
  turns[turnIndex] = {
    ...existing,
    feedback: { ...existing.feedback, [key]: { verdict, status } },
  };
  return { ...state, turns };
}
