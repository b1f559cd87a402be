// Microphone capture to raw mono float samples via the Web Audio API.
// MediaRecorder would hand back compressed opus, so samples are collected
// from a ScriptProcessorNode instead and encoded to PCM-16 WAV by the
// caller.

export interface CaptureResult {
  samples: Float32Array;
  sampleRate: number;
}

export class MicRecorder {
  private chunks: Float32Array[] = [];
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private processor: ScriptProcessorNode | null = null;

  get recording(): boolean {
    return this.context !== null;
  }

  /** Throws DOMException (NotAllowedError) when permission is denied. */
  async start(): Promise<void> {
    if (this.recording) return;
    this.stream = await navigator.mediaDevices.getUserMedia({
      audio: { echoCancellation: false, noiseSuppression: false, autoGainControl: false },
    });
    this.context = new AudioContext();
    const source = this.context.createMediaStreamSource(this.stream);
    this.processor = this.context.createScriptProcessor(4096, 1, 1);
    this.chunks = [];
    this.processor.onaudioprocess = (event) => {
      this.chunks.push(new Float32Array(event.inputBuffer.getChannelData(0)));
    };
    source.connect(this.processor);
    this.processor.connect(this.context.destination);
  }

  async stop(): Promise<CaptureResult> {
    if (!this.context || !this.stream) throw new Error("not recording");
    const sampleRate = this.context.sampleRate;
    this.processor?.disconnect();
    this.stream.getTracks().forEach((track) => track.stop());
    await this.context.close();
    this.context = null;
    this.stream = null;
    this.processor = null;

    const total = this.chunks.reduce((acc, chunk) => acc + chunk.length, 0);
    const samples = new Float32Array(total);
    let offset = 0;
    for (const chunk of this.chunks) {
      samples.set(chunk, offset);
      offset += chunk.length;
    }
    this.chunks = [];
    return { samples, sampleRate };
  }
}
