// DOM wiring. All regrettable-state lives here; the API client,
// validators and view models are the plain modules under this
// directory. Server text is always inserted with textContent so the
// document and chat render verbatim.

import { ApiClient, ApiError } from "./api.js";
import type { EmrResult } from "./api.js";
import { checkRecordingText } from "./validate.js";
import type { LocalCheck } from "./validate.js";
import { ChatTranscript } from "./transcript.js";
import { PipelineStages } from "./stages.js";
import { emrSections, provenanceLines } from "./render.js";
import type { ModelInfo, PatientSubmission } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const apiBaseEl = $<HTMLInputElement>("api-base");
const apiStatusEl = $("api-status");
const offlineBanner = $("offline-banner");
const expiredBanner = $("expired-banner");
const fileInput = $<HTMLInputElement>("file-input");
const fileStatusEl = $("file-status");
const fileErrorsEl = $("file-errors");
const fileGroup = $("file-group");
const demoGroup = $("demo-group");
const genderEl = $<HTMLSelectElement>("gender");
const ageEl = $<HTMLInputElement>("age");
const facialEl = $<HTMLInputElement>("facial");
const topKEl = $<HTMLInputElement>("top-k");
const maxNewEl = $<HTMLInputElement>("max-new");
const temperatureEl = $<HTMLInputElement>("temperature");
const seedEl = $<HTMLInputElement>("seed");
const submitBtn = $<HTMLButtonElement>("submit-btn");
const submitErrorEl = $("submit-error");
const stageListEl = $("stage-list");
const emrViewEl = $("emr-view");
const emrSourceEl = $<HTMLPreElement>("emr-source");
const sourceToggle = $<HTMLButtonElement>("source-toggle");
const provenanceEl = $("provenance");
const messagesEl = $("messages");
const chatForm = $<HTMLFormElement>("chat-form");
const questionEl = $<HTMLInputElement>("question");
const sendBtn = $<HTMLButtonElement>("send-btn");

const BASE_KEY = "eegemr-api-base";

let client = new ApiClient(localStorage.getItem(BASE_KEY) ?? apiBaseEl.value);
let fileCheck: LocalCheck | null = null;
let lastResult: EmrResult | null = null;
let models: ModelInfo[] = [];
let transcript = new ChatTranscript();
let sessionId: string | null = null;
let submitting = false;
const stages = new PipelineStages();

apiBaseEl.value = client.baseUrl;

function setOffline(offline: boolean): void {
  offlineBanner.classList.toggle("hidden", !offline);
}

function renderStages(): void {
  stageListEl.replaceChildren();
  for (const s of stages.stages) {
    const li = document.createElement("li");
    li.dataset.status = s.status;
    const label = document.createElement("span");
    label.textContent = s.label;
    li.appendChild(label);
    if (s.note) {
      const note = document.createElement("span");
      note.className = "stage-note";
      note.textContent = s.note;
      li.appendChild(note);
    }
    stageListEl.appendChild(li);
  }
}

function renderTranscript(): void {
  messagesEl.replaceChildren();
  for (const entry of transcript.entries) {
    const div = document.createElement("div");
    div.className = `bubble ${entry.role}`;
    div.textContent = entry.text;
    messagesEl.appendChild(div);
  }
  messagesEl.scrollTop = messagesEl.scrollHeight;
}

function renderEmr(result: EmrResult): void {
  emrViewEl.replaceChildren();
  for (const section of emrSections(result.document)) {
    const h = document.createElement("h3");
    h.textContent = section.title;
    const p = document.createElement("p");
    p.textContent = section.body;
    p.dataset.section = section.key;
    emrViewEl.append(h, p);
  }
  // the source view is the untouched response body
  emrSourceEl.textContent = result.raw;
  sourceToggle.disabled = false;
  provenanceEl.replaceChildren();
  for (const line of provenanceLines(result.document.provenance, models)) {
    const div = document.createElement("div");
    div.textContent = line;
    provenanceEl.appendChild(div);
  }
}

async function refreshHealth(): Promise<void> {
  apiStatusEl.textContent = "checking…";
  apiStatusEl.dataset.state = "";
  try {
    await client.health();
    const listed = await client.models();
    models = listed.models;
    const m = models[0];
    apiStatusEl.textContent = m
      ? `ok — ${m.model_id} (d=${m.d_model}, ${m.n_layers} layers)`
      : "ok";
    apiStatusEl.dataset.state = "ok";
    setOffline(false);
  } catch (e) {
    models = [];
    apiStatusEl.textContent = e instanceof ApiError ? e.body.message : "unreachable";
    apiStatusEl.dataset.state = "error";
    setOffline(true);
  }
}

function applyBaseUrl(): void {
  client = new ApiClient(apiBaseEl.value);
  localStorage.setItem(BASE_KEY, client.baseUrl);
  void refreshHealth();
}

function showFileCheck(check: LocalCheck, sourceName: string): void {
  fileCheck = check;
  fileErrorsEl.replaceChildren();
  fileGroup.classList.toggle("invalid", !check.ok);
  if (!check.ok) {
    fileStatusEl.textContent = `${sourceName}: rejected locally`;
    for (const err of check.errors) {
      const li = document.createElement("li");
      li.textContent = err;
      fileErrorsEl.appendChild(li);
    }
    return;
  }
  const rec = check.recording!;
  fileStatusEl.textContent =
    `${sourceName}: ${rec.channels.length} channel(s) × ` +
    `${rec.channels[0].samples.length} samples @ ${rec.sampling_rate_hz} Hz`;
  if (check.demographics?.gender) genderEl.value = check.demographics.gender;
  if (check.demographics?.age !== undefined) ageEl.value = String(check.demographics.age);
  if (check.demographics?.facial_features) facialEl.value = check.demographics.facial_features;
}

function highlightServerError(err: ApiError): void {
  submitErrorEl.textContent = `${err.body.code}: ${err.body.message}`;
  const locs = (err.body.details ?? []).map((d) => d.loc.join("."));
  demoGroup.classList.toggle("invalid", locs.some((l) => l.includes("demographics")));
  fileGroup.classList.toggle(
    "invalid",
    err.body.code === "invalid_recording" || locs.some((l) => l.includes("recording")),
  );
}

function clearHighlights(): void {
  submitErrorEl.textContent = "";
  demoGroup.classList.remove("invalid");
  fileGroup.classList.remove("invalid");
}

function buildSubmission(): PatientSubmission {
  return {
    demographics: {
      gender: genderEl.value,
      age: Number(ageEl.value),
      facial_features: facialEl.value.trim() === "" ? null : facialEl.value,
    },
    recording: fileCheck!.recording!,
    generation: {
      top_k: Number(topKEl.value),
      max_new_tokens: Number(maxNewEl.value),
      temperature: Number(temperatureEl.value),
      seed: Number(seedEl.value),
    },
  };
}

async function submit(): Promise<void> {
  if (submitting) return;
  clearHighlights();
  stages.reset();
  if (!fileCheck || !fileCheck.ok) {
    stages.fileChecked(false, fileCheck ? "fix the file errors above" : "choose a recording file");
    renderStages();
    return;
  }
  stages.fileChecked(true);
  stages.requestStarted();
  renderStages();
  submitting = true;
  submitBtn.disabled = true;
  try {
    const result = await client.submitEmr(buildSubmission());
    stages.requestSucceeded();
    renderStages();
    lastResult = result;
    sessionId = result.document.session_id;
    transcript = new ChatTranscript();
    renderTranscript();
    questionEl.disabled = false;
    sendBtn.disabled = false;
    expiredBanner.classList.add("hidden");
    renderEmr(result);
    stages.rendered();
    setOffline(false);
  } catch (e) {
    if (e instanceof ApiError) {
      stages.requestFailed(e.body.code, e.body.message);
      highlightServerError(e);
    } else {
      stages.requestFailed("network", "server unreachable");
      setOffline(true);
    }
  } finally {
    submitting = false;
    submitBtn.disabled = false;
    renderStages();
  }
}

async function sendQuestion(): Promise<void> {
  if (sessionId === null) return;
  if (!transcript.beginSend(questionEl.value)) return;
  questionEl.disabled = true;
  sendBtn.disabled = true;
  try {
    const res = await client.chat({ session_id: sessionId, question: questionEl.value.trim() });
    transcript.completeSend(res.answer, res.turns);
    questionEl.value = "";
    renderTranscript();
  } catch (e) {
    const question = transcript.failSend();
    questionEl.value = question;
    if (e instanceof ApiError && e.body.code === "session_not_found") {
      transcript.markExpired();
      expiredBanner.classList.remove("hidden");
    } else if (!(e instanceof ApiError)) {
      setOffline(true);
    }
  } finally {
    const locked = transcript.expired;
    questionEl.disabled = locked;
    sendBtn.disabled = locked;
    if (!locked) questionEl.focus();
  }
}

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  void file.text().then((text) => showFileCheck(checkRecordingText(text), file.name));
});

$("load-example").addEventListener("click", () => {
  void fetch("example-recording.json")
    .then((r) => {
      if (!r.ok) throw new Error(`HTTP ${r.status}`);
      return r.text();
    })
    .then((text) => showFileCheck(checkRecordingText(text), "bundled example"))
    .catch((e) => showFileCheck({ ok: false, errors: [`could not load example: ${e}`] }, "bundled example"));
});

$<HTMLFormElement>("emr-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  void submit();
});

chatForm.addEventListener("submit", (ev) => {
  ev.preventDefault();
  void sendQuestion();
});

sourceToggle.addEventListener("click", () => {
  const showing = !emrSourceEl.classList.contains("hidden");
  emrSourceEl.classList.toggle("hidden", showing);
  emrViewEl.classList.toggle("hidden", !showing);
  sourceToggle.textContent = showing ? "View source" : "View document";
});

$("api-check").addEventListener("click", applyBaseUrl);
apiBaseEl.addEventListener("change", applyBaseUrl);
$("retry-btn").addEventListener("click", () => void refreshHealth());
$("resubmit-btn").addEventListener("click", () => {
  expiredBanner.classList.add("hidden");
  void submit();
});

renderStages();
void refreshHealth();
