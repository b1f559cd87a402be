// Typed client for the coughpoc service HTTP API.  The UI performs no
// classification of its own: every number it shows comes from these
// responses.

export interface PhaseView {
  name: string;
  start_ms: number;
  end_ms: number;
}

export interface SegmentView {
  start_ms: number;
  end_ms: number;
  pattern: string | null;
  phases: PhaseView[];
  wet_dry: { label: string; ratio: number; confidence: number } | null;
}

export interface Report {
  record_id: string;
  created_at: string;
  clip_ref: string;
  sensor: { temp_c: number | null; airflow_peak_lps: number | null; airflow_volume_l: number | null };
  segments: SegmentView[];
  memberships: Record<string, number> | null;
  diagnosis: string | null;
  status: "draft" | "submitted";
}

export interface SpectrogramPayload {
  record_id: string;
  n_frames: number;
  n_filters: number;
  frame_ms: number;
  matrix: number[][];
}

export type UploadResult =
  | { kind: "report"; report: Report }
  | { kind: "no_cough"; recordId: string };

export interface SensorMeta {
  temp_c?: number;
  airflow_peak_lps?: number;
  airflow_volume_l?: number;
  region?: string;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class PocClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async uploadClip(wav: ArrayBuffer, meta: SensorMeta): Promise<UploadResult> {
    const form = new FormData();
    form.append("audio", new Blob([wav], { type: "audio/wav" }), "clip.wav");
    form.append("meta", JSON.stringify(meta));
    const response = await this.fetchFn(`${this.baseUrl}/v1/clips`, {
      method: "POST",
      body: form,
    });
    const body = await response.json();
    if (response.status === 422) {
      return { kind: "no_cough", recordId: body.record_id };
    }
    if (!response.ok) {
      throw new ApiError(response.status, body.detail ?? `upload failed (${response.status})`);
    }
    return { kind: "report", report: body.report as Report };
  }

  async getReport(recordId: string): Promise<Report> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/reports/${recordId}`);
    const body = await response.json();
    if (!response.ok) throw new ApiError(response.status, body.detail ?? "report fetch failed");
    return body as Report;
  }

  async submitReport(recordId: string): Promise<Report> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/reports/${recordId}/submit`, {
      method: "POST",
    });
    const body = await response.json();
    if (!response.ok) throw new ApiError(response.status, body.detail ?? "submit failed");
    return body as Report;
  }

  async getSpectrogram(recordId: string): Promise<SpectrogramPayload> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/reports/${recordId}/spectrogram`);
    const body = await response.json();
    if (!response.ok) throw new ApiError(response.status, body.detail ?? "spectrogram fetch failed");
    return body as SpectrogramPayload;
  }
}
