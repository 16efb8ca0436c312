// Typed client for the editing service. Thin: no retries beyond a simple
// offline queue for edits, no client-side numeric transforms.

import {
  AlignmentDocument,
  ApiError,
  EditRequest,
  EditResponse,
  HealthResponse,
  HedDocument,
  SessionResponse,
  SynthesizeResponse,
  UtteranceSummary,
} from "./types.js";

type FetchLike = typeof fetch;

export class ApiClient {
  /** Count of edit POSTs actually sent; the editor-fidelity check reads it. */
  editRequestsSent = 0;

  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail: unknown = null;
      try {
        detail = (await response.json()) as { detail?: unknown };
      } catch {
        // non-JSON error body
      }
      throw new ApiError(
        response.status,
        detail && typeof detail === "object" && "detail" in detail
          ? (detail as { detail: unknown }).detail
          : detail,
      );
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/health");
  }

  utterances(): Promise<UtteranceSummary[]> {
    return this.request<UtteranceSummary[]>("/utterances");
  }

  alignment(utteranceId: string): Promise<AlignmentDocument> {
    return this.request<AlignmentDocument>(
      `/utterances/${encodeURIComponent(utteranceId)}/alignment`,
    );
  }

  hed(utteranceId: string): Promise<HedDocument> {
    return this.request<HedDocument>(
      `/utterances/${encodeURIComponent(utteranceId)}/hed`,
    );
  }

  createSession(utteranceId: string): Promise<SessionResponse> {
    return this.post<SessionResponse>("/sessions", {
      utterance_id: utteranceId,
    });
  }

  sessionHed(sessionId: string): Promise<HedDocument> {
    return this.request<{ hed: HedDocument }>(`/sessions/${sessionId}`).then(
      (doc) => doc.hed,
    );
  }

  edit(sessionId: string, edit: EditRequest): Promise<EditResponse> {
    this.editRequestsSent += 1;
    return this.post<EditResponse>(`/sessions/${sessionId}/edit`, edit);
  }

  undo(sessionId: string): Promise<EditResponse> {
    return this.post<EditResponse>(`/sessions/${sessionId}/undo`, {});
  }

  synthesize(
    sessionId: string,
    seed: number,
    nOdeSteps = 10,
  ): Promise<SynthesizeResponse> {
    return this.post<SynthesizeResponse>(`/sessions/${sessionId}/synthesize`, {
      seed,
      n_ode_steps: nOdeSteps,
    });
  }

  audioUrl(audioId: string): string {
    return `${this.baseUrl}/audio/${audioId}`;
  }

  async audioBytes(audioId: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.audioUrl(audioId));
    if (!response.ok) {
      throw new ApiError(response.status, null);
    }
    return response.arrayBuffer();
  }
}
