/**
 * Minimal PNG header reader: width/height from the IHDR chunk. The stub
 * backend needs image dimensions to size its masks without decoding pixels.
 */

import { openSync, readSync, closeSync } from 'fs'

const PNG_SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a])

export function readPngSize(path: string): { width: number; height: number } {
  const fd = openSync(path, 'r')
  try {
    const header = Buffer.alloc(24)
    const read = readSync(fd, header, 0, 24, 0)
    if (read < 24 || !header.subarray(0, 8).equals(PNG_SIGNATURE)) {
      throw new Error(`${path} is not a PNG file`)
    }
    if (header.subarray(12, 16).toString('ascii') !== 'IHDR') {
      throw new Error(`${path} has no IHDR chunk where expected`)
    }
    return { width: header.readUInt32BE(16), height: header.readUInt32BE(20) }
  } finally {
    closeSync(fd)
  }
}
