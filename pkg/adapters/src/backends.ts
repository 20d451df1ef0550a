/**
 * Model backends behind the protocol handler.
 *
 * The adapter never interprets geometry beyond producing raw detections and
 * masks; every accept/reject decision stays in the labeling pipeline.
 */

import { existsSync } from 'fs'

import { readPngSize } from './png'
import { encodeMask } from './rle'
import { Detection, MaskRle, Request } from './protocol'

export interface AdapterConfig {
  backend: 'stub' | 'http'
  /** model identifier: HTTP base URL for the http backend */
  model: string
  device: string
  scoreThreshold: number
  timeoutMs: number
  /** fixed image size 'WxH'; stub reads PNG headers when unset */
  imageSize?: { width: number; height: number }
}

export interface Backend {
  name: string
  verify(req: Request): Promise<Detection[]>
  segment(req: Request): Promise<MaskRle>
}

function imageDims(config: AdapterConfig, path: string): { width: number; height: number } {
  if (config.imageSize) return config.imageSize
  if (!existsSync(path)) {
    throw new Error(`image not found: ${path}`)
  }
  return readPngSize(path)
}

/**
 * Deterministic test backend: verify echoes the hint (or the point bounds),
 * segment fills the axis-aligned bounds of the prompt points. Exercises the
 * full protocol path with zero model assets.
 */
export function stubBackend(config: AdapterConfig): Backend {
  return {
    name: 'stub',
    async verify(req) {
      let box = req.bbox_hint
      if (!box && req.points && req.points.length > 0) {
        const us = req.points.map((p) => p[0])
        const vs = req.points.map((p) => p[1])
        const x = Math.min(...us)
        const y = Math.min(...vs)
        box = [x, y, Math.max(...us) - x, Math.max(...vs) - y]
      }
      if (!box) return []
      const label = req.class_names?.[0] ?? 'drink glass'
      return [{ bbox: box, score: 0.9, label }]
    },
    async segment(req) {
      const { width, height } = imageDims(config, req.image_path)
      const points = req.points ?? []
      const clamp = (v: number, hi: number) => Math.min(Math.max(Math.round(v), 0), hi - 1)
      const xs = points.map((p) => clamp(p[0], width))
      const ys = points.map((p) => clamp(p[1], height))
      const x0 = Math.min(...xs)
      const x1 = Math.max(...xs)
      const y0 = Math.min(...ys)
      const y1 = Math.max(...ys)
      const bitmap = new Uint8Array(width * height)
      for (let y = y0; y <= y1; y++) {
        bitmap.fill(1, y * width + x0, y * width + x1 + 1)
      }
      return encodeMask(bitmap, width, height)
    },
  }
}
