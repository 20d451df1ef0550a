import { describe, expect, it } from 'vitest'

import { stubBackend } from '../src/backends'
import { handleLine } from '../src/handler'
import { decodeMask } from '../src/rle'
import { runSelftest } from '../src/selftest'

const SIZE = { width: 64, height: 48 }
const backend = stubBackend({
  backend: 'stub', model: '', device: 'cpu',
  scoreThreshold: 0, timeoutMs: 1000, imageSize: SIZE,
})

describe('handleLine with the stub backend', () => {
  it('answers verify with the echoed hint', async () => {
    const response = await handleLine(JSON.stringify({
      id: 11, op: 'verify', image_path: 'x.png',
      bbox_hint: [3, 4, 10, 12], class_names: ['shot glass'],
    }), backend)
    const msg = JSON.parse(response)
    expect(msg.id).toBe(11)
    expect(msg.ok).toBe(true)
    expect(msg.detections[0].bbox).toEqual([3, 4, 10, 12])
    expect(msg.detections[0].label).toBe('shot glass')
  })

  it('answers segment with a decodable point-bounds mask', async () => {
    const response = await handleLine(JSON.stringify({
      id: 12, op: 'segment', image_path: 'x.png',
      points: [[5, 5], [20, 5], [12, 15]],
    }), backend)
    const msg = JSON.parse(response)
    expect(msg.ok).toBe(true)
    const mask = decodeMask(msg.mask_rle)
    expect(mask.width).toBe(SIZE.width)
    expect(mask.height).toBe(SIZE.height)
    // bounds rectangle: rows 5..15, cols 5..20
    expect(mask.bitmap[5 * SIZE.width + 5]).toBe(1)
    expect(mask.bitmap[15 * SIZE.width + 20]).toBe(1)
    expect(mask.bitmap[0]).toBe(0)
  })

  it('turns backend failures into error responses', async () => {
    const noSize = stubBackend({
      backend: 'stub', model: '', device: 'cpu', scoreThreshold: 0, timeoutMs: 1000,
    })
    const response = await handleLine(JSON.stringify({
      id: 13, op: 'segment', image_path: '/nonexistent.png', points: [[1, 1]],
    }), noSize)
    const msg = JSON.parse(response)
    expect(msg.ok).toBe(false)
    expect(msg.id).toBe(13)
  })

  it('echoes ids from malformed requests when parseable', async () => {
    const msg = JSON.parse(await handleLine(JSON.stringify({ id: 14, op: 'nope' }), backend))
    expect(msg).toMatchObject({ id: 14, ok: false })
  })
})

describe('bundled selftest', () => {
  it('passes against the stub backend', async () => {
    const results = await runSelftest(backend, SIZE)
    const failed = results.filter((r) => !r.passed)
    expect(failed).toEqual([])
  })
})
