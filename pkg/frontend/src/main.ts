import { PocClient } from "./api.js";
import { CoughApp, queryElements } from "./app.js";
import { MicRecorder } from "./recorder.js";

const hasMic = typeof navigator !== "undefined" && !!navigator.mediaDevices?.getUserMedia;
const app = new CoughApp(queryElements(document), new PocClient(""), hasMic ? new MicRecorder() : null);

const recordId = window.location.hash.replace(/^#/, "");
if (recordId) {
  void app.showRecord(recordId);
}
