import { describe, expect, it } from 'vitest'

import {
  ProtocolError,
  createLineSplitter,
  errorResponse,
  parseRequest,
  salvageId,
  segmentResponse,
  verifyResponse,
} from '../src/protocol'

describe('parseRequest', () => {
  it('accepts a valid verify request', () => {
    const req = parseRequest(JSON.stringify({
      id: 5, op: 'verify', image_path: 'a.png',
      points: [[1, 2]], bbox_hint: [0, 0, 4, 4], class_names: ['wine glass'],
    }))
    expect(req.id).toBe(5)
    expect(req.op).toBe('verify')
  })

  it('accepts nulls for optional fields', () => {
    const req = parseRequest(JSON.stringify({ id: 1, op: 'verify', image_path: 'a.png' }))
    expect(req.points).toBeNull()
    expect(req.bbox_hint).toBeNull()
    expect(req.class_names).toBeNull()
  })

  it.each([
    '{not json',
    JSON.stringify(['verify']),
    JSON.stringify({ op: 'verify', image_path: 'a.png' }),
    JSON.stringify({ id: 1, op: 'florble', image_path: 'a.png' }),
    JSON.stringify({ id: 1, op: 'verify' }),
    JSON.stringify({ id: 1, op: 'segment', image_path: 'a.png', points: [] }),
    JSON.stringify({ id: 1, op: 'segment', image_path: 'a.png' }),
    JSON.stringify({ id: 1, op: 'verify', image_path: 'a.png', bbox_hint: [1, 2] }),
    JSON.stringify({ id: 1, op: 'verify', image_path: 'a.png', points: [[1]] }),
    JSON.stringify({ id: 1, op: 'verify', image_path: 'a.png', class_names: [3] }),
  ])('rejects %s', (line) => {
    expect(() => parseRequest(line)).toThrow(ProtocolError)
  })
})

describe('salvageId', () => {
  it('recovers the id from a structurally bad request', () => {
    expect(salvageId(JSON.stringify({ id: 9, op: 'florble' }))).toBe(9)
  })

  it('returns null for unparseable lines', () => {
    expect(salvageId('{nope')).toBeNull()
  })
})

describe('responses', () => {
  it('verify response round-trips', () => {
    const line = verifyResponse(2, [{ bbox: [1, 2, 3, 4], score: 0.5, label: 'glass' }])
    const msg = JSON.parse(line)
    expect(msg).toEqual({ id: 2, ok: true, detections: [{ bbox: [1, 2, 3, 4], score: 0.5, label: 'glass' }] })
  })

  it('verify response rejects out-of-range scores', () => {
    expect(() => verifyResponse(1, [{ bbox: [0, 0, 1, 1], score: 1.5, label: 'x' }])).toThrow(ProtocolError)
  })

  it('segment response enforces pixel coverage', () => {
    expect(() => segmentResponse(1, { counts: [3], size: [2, 2] })).toThrow(ProtocolError)
    const ok = segmentResponse(1, { counts: [1, 2, 1], size: [2, 2] })
    expect(JSON.parse(ok).ok).toBe(true)
  })

  it('error response echoes the id', () => {
    expect(JSON.parse(errorResponse(null, 'bad'))).toEqual({ id: null, ok: false, error: 'bad' })
  })
})

describe('createLineSplitter', () => {
  it('handles chunked and batched lines', () => {
    const lines: string[] = []
    const push = createLineSplitter((l) => lines.push(l))
    push('{"a":')
    push('1}\n{"b":2}\n\n')
    push('{"c":3}\n')
    expect(lines).toEqual(['{"a":1}', '{"b":2}', '{"c":3}'])
  })
})
