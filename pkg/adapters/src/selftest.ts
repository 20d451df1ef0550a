/**
 * Bundled conformance fixtures, runnable without the labeling toolchain:
 * `node dist/main.js --selftest`. Mirrors the checks the pipeline runs
 * against its built-in mocks before trusting any plugin.
 */

import { Backend } from './backends'
import { handleLine } from './handler'
import { decodeMask } from './rle'

interface CheckResult {
  name: string
  passed: boolean
  detail?: string
}

const IMAGE = '__selftest__.png'

async function roundtrip(backend: Backend, payload: unknown): Promise<Record<string, unknown>> {
  const response = await handleLine(JSON.stringify(payload), backend)
  return JSON.parse(response)
}

export async function runSelftest(backend: Backend, imageSize: { width: number; height: number }): Promise<CheckResult[]> {
  const results: CheckResult[] = []
  const record = (name: string, passed: boolean, detail?: string) =>
    results.push({ name, passed, detail })

  const verifyReq = {
    id: 201,
    op: 'verify',
    image_path: IMAGE,
    points: [[5, 6], [20, 18]],
    bbox_hint: [4, 5, 20, 16],
    class_names: ['water glass', 'drink glass'],
  }
  const verify = await roundtrip(backend, verifyReq)
  record('verify_schema_and_id_echo',
    verify.id === 201 && verify.ok === true && Array.isArray(verify.detections),
    JSON.stringify(verify))

  const detections = (verify.detections as { score: number; bbox: unknown[]; label: unknown }[]) ?? []
  record('verify_scores_in_range',
    detections.every((d) => d.score >= 0 && d.score <= 1 && d.bbox.length === 4 && typeof d.label === 'string'))

  const segmentReq = {
    id: 202,
    op: 'segment',
    image_path: IMAGE,
    points: [[3, 4], [15, 6], [9, 14]],
  }
  const segment = await roundtrip(backend, segmentReq)
  let rleOk = segment.id === 202 && segment.ok === true
  if (rleOk) {
    try {
      const mask = decodeMask(segment.mask_rle as { counts: number[]; size: [number, number] })
      rleOk = mask.width === imageSize.width && mask.height === imageSize.height
    } catch (err) {
      rleOk = false
      record('segment_mask_rle_decodes', false, String(err))
    }
  }
  record('segment_mask_rle_decodes', rleOk)

  const again = await roundtrip(backend, { ...segmentReq, id: 203 })
  record('responses_independent_of_order',
    JSON.stringify({ ...segment, id: 0 }) === JSON.stringify({ ...again, id: 0 }))

  const malformed = await roundtrip(backend, { id: 204, op: 'florble', image_path: IMAGE })
  record('malformed_request_rejected_id_echoed',
    malformed.ok === false && malformed.id === 204 && typeof malformed.error === 'string')

  const unparseable = JSON.parse(await handleLine('{not json', backend))
  record('unparseable_request_rejected', unparseable.ok === false)

  return results
}
