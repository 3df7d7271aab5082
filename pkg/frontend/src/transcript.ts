// Chat transcript state. One request in flight at a time; the
// transcript only ever reflects exchanges the server has confirmed, so
// a failed send leaves it untouched (the question goes back to the
// input instead).

export interface Entry {
  role: "user" | "assistant";
  text: string;
}

export class ChatTranscript {
  entries: Entry[] = [];
  /** total stored turns as last reported by the server */
  turns = 0;
  expired = false;
  private pending: string | null = null;

  get inFlight(): boolean {
    return this.pending !== null;
  }

  /**
   * Claim the in-flight slot for a question. Returns false (and sends
   * nothing) when empty, already sending, or the session has expired —
   * this is what makes a double-clicked send button one request.
   */
  beginSend(question: string): boolean {
    const q = question.trim();
    if (q.length === 0 || this.pending !== null || this.expired) return false;
    this.pending = q;
    return true;
  }

  /** Server answered: append exactly one question/answer pair, in order. */
  completeSend(answer: string, turns: number): void {
    if (this.pending === null) throw new Error("no send in flight");
    this.entries.push({ role: "user", text: this.pending });
    this.entries.push({ role: "assistant", text: answer });
    this.pending = null;
    this.turns = turns;
  }

  /** Send failed: transcript unchanged; returns the question for re-editing. */
  failSend(): string {
    if (this.pending === null) throw new Error("no send in flight");
    const q = this.pending;
    this.pending = null;
    return q;
  }

  /** The server no longer knows this session (404). */
  markExpired(): void {
    this.expired = true;
    this.pending = null;
  }
}
