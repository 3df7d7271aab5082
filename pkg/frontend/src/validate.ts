// Local checks on an uploaded recording file, mirroring the server's
// recording rules so obviously broken files never cost a request.
// Anything that depends on server-side processing (minimum length for
// the compression method, gender vocabulary) is left to the server and
// surfaced from its 422 instead.

import type { Demographics, RecordingIn } from "./types.js";

export interface LocalCheck {
  ok: boolean;
  errors: string[];
  recording?: RecordingIn;
  /** gender/age/facial_features lifted from the file, for prefilling the form */
  demographics?: Partial<Demographics>;
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

export function checkRecordingText(text: string): LocalCheck {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (e) {
    return { ok: false, errors: [`file is not valid JSON: ${(e as Error).message}`] };
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    return { ok: false, errors: ["file must contain a JSON object"] };
  }
  const obj = parsed as Record<string, unknown>;
  const errors: string[] = [];

  const rate = obj.sampling_rate_hz;
  if (!isFiniteNumber(rate) || rate <= 0) {
    errors.push("sampling_rate_hz must be a positive number");
  }

  const channels: { name: string; samples: number[] }[] = [];
  if (!Array.isArray(obj.channels) || obj.channels.length === 0) {
    errors.push("channels must be a non-empty array");
  } else {
    obj.channels.forEach((ch, i) => {
      if (typeof ch !== "object" || ch === null) {
        errors.push(`channels[${i}] must be an object`);
        return;
      }
      const c = ch as Record<string, unknown>;
      if (typeof c.name !== "string" || c.name.length === 0) {
        errors.push(`channels[${i}].name must be a non-empty string`);
        return;
      }
      if (!Array.isArray(c.samples) || c.samples.length === 0) {
        errors.push(`channels[${i}] (${c.name}): samples must be a non-empty array`);
        return;
      }
      // note JSON.parse turns 1e999 into Infinity, so this is reachable
      if (!c.samples.every(isFiniteNumber)) {
        errors.push(`channels[${i}] (${c.name}): samples must all be finite numbers`);
        return;
      }
      channels.push({ name: c.name, samples: c.samples as number[] });
    });
    const names = channels.map((c) => c.name);
    if (new Set(names).size !== names.length) {
      errors.push("channel names must be unique");
    }
    if (new Set(channels.map((c) => c.samples.length)).size > 1) {
      errors.push("all channels must have the same sample count");
    }
    if (channels.some((c) => c.samples.length < 2)) {
      errors.push("channels need at least 2 samples");
    }
  }

  let subjectId = "anonymous";
  if (obj.subject_id !== undefined) {
    if (typeof obj.subject_id !== "string" || obj.subject_id.length === 0) {
      errors.push("subject_id must be a non-empty string when present");
    } else {
      subjectId = obj.subject_id;
    }
  }

  // recording files written by the pipeline carry demographics; lift
  // them so the form can prefill, but treat malformed values as file
  // faults rather than silently dropping them
  const demographics: Partial<Demographics> = {};
  if (obj.gender !== undefined) {
    if (typeof obj.gender !== "string") errors.push("gender must be a string when present");
    else demographics.gender = obj.gender;
  }
  if (obj.age !== undefined) {
    if (!isFiniteNumber(obj.age) || !Number.isInteger(obj.age) || obj.age < 0 || obj.age > 150) {
      errors.push("age must be an integer in [0, 150] when present");
    } else {
      demographics.age = obj.age;
    }
  }
  if (obj.facial_features !== undefined && obj.facial_features !== null) {
    if (typeof obj.facial_features !== "string") {
      errors.push("facial_features must be a string when present");
    } else {
      demographics.facial_features = obj.facial_features;
    }
  }

  if (errors.length > 0) return { ok: false, errors };
  return {
    ok: true,
    errors: [],
    recording: { subject_id: subjectId, sampling_rate_hz: rate as number, channels },
    demographics,
  };
}
