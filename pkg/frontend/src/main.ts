import { postFeedback, requestRecommendations } from "./api.js";
import {
  ChatState,
  Verdict,
  beginRequest,
  completeRequest,
  failRequest,
  initialState,
  markFeedback,
  nextVerdict,
} from "./state.js";
import { render, Handlers } from "./ui.js";

const RESULT_COUNT = 10;

function newSessionId(): string {
  return `web-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;
}

function findRequestText(state: ChatState, turnIndex: number): string {
  for (let i = turnIndex - 1; i >= 0; i -= 1) {
    if (state.turns[i].role === "user") {
      return state.turns[i].text;
    }
  }
  return "";
}

function start(root: HTMLElement): void {
  let state = initialState(newSessionId());

  const update = (next: ChatState) => {
    state = next;
    render(root, state, handlers);
  };

  const submit = async (text: string) => {
    const before = state;
    update(beginRequest(state, text));
    if (state === before) {
      return; // submission was not allowed (empty text or already pending)
    }
    try {
      const response = await requestRecommendations(text.trim(), RESULT_COUNT, state.sessionId);
      update(completeRequest(state, response.items, text.trim()));
    } catch {
      update(failRequest(state, text.trim()));
    }
  };

  const handlers: Handlers = {
    onSubmit: (text) => void submit(text),
    onRetry: (text) => void submit(text),
    onFeedback: (turnIndex, key, itemId, clicked: Verdict) => {
      const mark = state.turns[turnIndex]?.feedback[key];
      const verdict = nextVerdict(mark, clicked);
      if (verdict === null) {
        return;
      }
      const event = {
        session_id: state.sessionId,
        request_text: findRequestText(state, turnIndex),
        item_id: itemId,
        verdict,
      };
      postFeedback(event)
        .then(() => update(markFeedback(state, turnIndex, key, verdict, "accepted")))
        .catch(() => update(markFeedback(state, turnIndex, key, verdict, "failed")));
    },
  };

  render(root, state, handlers);
}

const root = document.getElementById("app");
if (root) {
  start(root);
}
