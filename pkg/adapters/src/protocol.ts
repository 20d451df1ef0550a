/**
 * Wire protocol: one JSON object per line over stdin/stdout.
 *
 * Request:  {id, op: "verify" | "segment", image_path, points, bbox_hint, class_names}
 * Response: {id, ok: true, detections: [{bbox, score, label}]}         (verify)
 *           {id, ok: true, mask_rle: {counts, size: [h, w]}}           (segment)
 *           {id (echoed when parseable), ok: false, error}
 */

export type Op = 'verify' | 'segment'

export interface Request {
  id: unknown
  op: Op
  image_path: string
  points: [number, number][] | null
  bbox_hint: [number, number, number, number] | null
  class_names: string[] | null
}

export interface Detection {
  bbox: [number, number, number, number]
  score: number
  label: string
}

export interface MaskRle {
  counts: number[]
  size: [number, number]
}

export class ProtocolError extends Error {}

function isPair(value: unknown): value is [number, number] {
  return Array.isArray(value) && value.length === 2 && value.every((v) => typeof v === 'number')
}

function isBox(value: unknown): value is [number, number, number, number] {
  return Array.isArray(value) && value.length === 4 && value.every((v) => typeof v === 'number')
}

export function parseRequest(line: string): Request {
  let raw: unknown
  try {
    raw = JSON.parse(line)
  } catch (err) {
    throw new ProtocolError(`request is not valid JSON: ${err}`)
  }
  if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
    throw new ProtocolError('request must be a JSON object')
  }
  const msg = raw as Record<string, unknown>
  if (!('id' in msg)) throw new ProtocolError("request is missing 'id'")
  if (msg.op !== 'verify' && msg.op !== 'segment') {
    throw new ProtocolError(`unknown op ${JSON.stringify(msg.op)}`)
  }
  if (typeof msg.image_path !== 'string') {
    throw new ProtocolError("request is missing 'image_path'")
  }
  const points = msg.points ?? null
  if (points !== null && (!Array.isArray(points) || !points.every(isPair))) {
    throw new ProtocolError("'points' must be a list of [u, v] pairs")
  }
  if (msg.op === 'segment' && (points === null || points.length === 0)) {
    throw new ProtocolError("'segment' requires at least one sample point")
  }
  const hint = msg.bbox_hint ?? null
  if (hint !== null && !isBox(hint)) {
    throw new ProtocolError("'bbox_hint' must be [x, y, w, h] or null")
  }
  const names = msg.class_names ?? null
  if (names !== null && (!Array.isArray(names) || !names.every((n) => typeof n === 'string'))) {
    throw new ProtocolError("'class_names' must be a list of strings")
  }
  return {
    id: msg.id,
    op: msg.op,
    image_path: msg.image_path,
    points: points as [number, number][] | null,
    bbox_hint: hint as Request['bbox_hint'],
    class_names: names as string[] | null,
  }
}

/** Best-effort id extraction from a line that failed full validation. */
export function salvageId(line: string): unknown {
  try {
    const raw = JSON.parse(line)
    if (typeof raw === 'object' && raw !== null && !Array.isArray(raw)) {
      return (raw as Record<string, unknown>).id ?? null
    }
  } catch {
    /* unparseable: no id to echo */
  }
  return null
}

export function verifyResponse(id: unknown, detections: Detection[]): string {
  for (const det of detections) {
    if (det.score < 0 || det.score > 1) {
      throw new ProtocolError(`detection score ${det.score} outside [0, 1]`)
    }
  }
  return JSON.stringify({ id, ok: true, detections })
}

export function segmentResponse(id: unknown, mask: MaskRle): string {
  const total = mask.counts.reduce((a, b) => a + b, 0)
  if (total !== mask.size[0] * mask.size[1]) {
    throw new ProtocolError('mask counts do not cover height*width pixels')
  }
  return JSON.stringify({ id, ok: true, mask_rle: mask })
}

export function errorResponse(id: unknown, message: string): string {
  return JSON.stringify({ id, ok: false, error: message })
}

/**
 * Incremental newline-delimited decoder; tolerates chunked stdin.
 */
export function createLineSplitter(onLine: (line: string) => void): (chunk: string) => void {
  let buffer = ''
  return (chunk: string) => {
    buffer += chunk
    let index: number
    while ((index = buffer.indexOf('\n')) >= 0) {
      const line = buffer.slice(0, index).trim()
      buffer = buffer.slice(index + 1)
      if (line.length > 0) onLine(line)
    }
  }
}
