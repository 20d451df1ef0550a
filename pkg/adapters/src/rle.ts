/**
 * Row-major run-length codec for binary masks: alternating run counts
 * starting with a zero-run, size = [height, width]. Responses always carry
 * RLE, never raw bitmaps, to bound message size.
 */

import { MaskRle } from './protocol'

export function encodeMask(bitmap: Uint8Array, width: number, height: number): MaskRle {
  if (bitmap.length !== width * height) {
    throw new Error(`bitmap length ${bitmap.length} != ${width}x${height}`)
  }
  const counts: number[] = []
  let current = 0
  let run = 0
  for (let i = 0; i < bitmap.length; i++) {
    const value = bitmap[i] ? 1 : 0
    if (value === current) {
      run += 1
    } else {
      counts.push(run)
      current = value
      run = 1
    }
  }
  counts.push(run)
  return { counts, size: [height, width] }
}

export function decodeMask(rle: MaskRle): { bitmap: Uint8Array; width: number; height: number } {
  const [height, width] = rle.size
  const total = rle.counts.reduce((a, b) => a + b, 0)
  if (total !== width * height) {
    throw new Error(`counts sum ${total} != ${width * height}`)
  }
  const bitmap = new Uint8Array(width * height)
  let position = 0
  let value = 0
  for (const count of rle.counts) {
    if (value === 1) bitmap.fill(1, position, position + count)
    position += count
    value = 1 - value
  }
  return { bitmap, width, height }
}
