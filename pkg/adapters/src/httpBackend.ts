/**
 * Backend that forwards requests to an inference HTTP server hosting the
 * actual open-vocabulary detector and promptable segmenter. The adapter
 * stays model-free; deployments point `--model-url` at whatever serves
 *
 *   GET  /health                         -> 200
 *   POST /verify  {image_path, bbox_hint, class_names} -> {detections: [...]}
 *   POST /segment {image_path, points}                 -> {mask_rle: {...}}
 */

import { AdapterConfig, Backend } from './backends'
import { Detection, MaskRle, Request } from './protocol'

async function post(url: string, payload: unknown, timeoutMs: number): Promise<unknown> {
  const controller = new AbortController()
  const timer = setTimeout(() => controller.abort(), timeoutMs)
  try {
    const response = await fetch(url, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
      signal: controller.signal,
    })
    if (!response.ok) {
      throw new Error(`model server returned ${response.status} for ${url}`)
    }
    return await response.json()
  } finally {
    clearTimeout(timer)
  }
}

export async function checkModelServer(config: AdapterConfig): Promise<void> {
  const controller = new AbortController()
  const timer = setTimeout(() => controller.abort(), config.timeoutMs)
  try {
    const response = await fetch(new URL('/health', config.model), { signal: controller.signal })
    if (!response.ok) {
      throw new Error(`health check returned ${response.status}`)
    }
  } catch (err) {
    throw new Error(`model server unreachable at ${config.model}: ${err}`)
  } finally {
    clearTimeout(timer)
  }
}

export function httpBackend(config: AdapterConfig): Backend {
  return {
    name: 'http',
    async verify(req: Request): Promise<Detection[]> {
      const data = (await post(new URL('/verify', config.model).toString(), {
        image_path: req.image_path,
        bbox_hint: req.bbox_hint,
        class_names: req.class_names,
        device: config.device,
      }, config.timeoutMs)) as { detections?: Detection[] }
      const detections = data.detections ?? []
      return detections.filter((d) => d.score >= config.scoreThreshold)
    },
    async segment(req: Request): Promise<MaskRle> {
      const data = (await post(new URL('/segment', config.model).toString(), {
        image_path: req.image_path,
        points: req.points,
        device: config.device,
      }, config.timeoutMs)) as { mask_rle?: MaskRle }
      if (!data.mask_rle) {
        throw new Error('model server response carries no mask_rle')
      }
      return data.mask_rle
    },
  }
}
