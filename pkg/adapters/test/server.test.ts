import { spawn } from 'node:child_process'
import { once } from 'node:events'
import * as path from 'node:path'

import { describe, expect, it } from 'vitest'

const ENTRY = path.resolve(__dirname, '..', 'dist', 'main.js')

function spawnAdapter(args: string[]) {
  return spawn(process.execPath, [ENTRY, ...args], { stdio: ['pipe', 'pipe', 'pipe'] })
}

async function driveRequests(lines: string[]): Promise<string[]> {
  const child = spawnAdapter(['--backend', 'stub', '--image-size', '32x24'])
  const responses: string[] = []
  let buffer = ''
  child.stdout.setEncoding('utf8')
  child.stdout.on('data', (chunk: string) => {
    buffer += chunk
    let idx
    while ((idx = buffer.indexOf('\n')) >= 0) {
      responses.push(buffer.slice(0, idx))
      buffer = buffer.slice(idx + 1)
    }
  })
  for (const line of lines) {
    child.stdin.write(line + '\n')
  }
  child.stdin.end()
  await once(child, 'exit')
  return responses
}

describe('stdio server', () => {
  it('answers in arrival order and exits on stdin close', async () => {
    const responses = await driveRequests([
      JSON.stringify({ id: 1, op: 'verify', image_path: 'x.png', bbox_hint: [0, 0, 5, 5] }),
      JSON.stringify({ id: 2, op: 'segment', image_path: 'x.png', points: [[1, 1], [6, 8]] }),
      '{broken',
    ])
    expect(responses).toHaveLength(3)
    expect(JSON.parse(responses[0])).toMatchObject({ id: 1, ok: true })
    expect(JSON.parse(responses[1])).toMatchObject({ id: 2, ok: true })
    expect(JSON.parse(responses[2])).toMatchObject({ id: null, ok: false })
  })

  it('selftest exits zero with all PASS lines', async () => {
    const child = spawnAdapter(['--selftest'])
    let output = ''
    child.stdout.setEncoding('utf8')
    child.stdout.on('data', (chunk: string) => (output += chunk))
    const [code] = await once(child, 'exit')
    expect(code).toBe(0)
    expect(output).toContain('PASS verify_schema_and_id_echo')
    expect(output).not.toContain('FAIL')
  })

  it('unknown arguments exit nonzero before serving', async () => {
    const child = spawnAdapter(['--florble'])
    const [code] = await once(child, 'exit')
    expect(code).toBe(2)
  })

  it('http backend without a reachable model server fails startup', async () => {
    const child = spawnAdapter(['--backend', 'http', '--model-url', 'http://127.0.0.1:1',
                                '--timeout-ms', '500'])
    let stderr = ''
    child.stderr.setEncoding('utf8')
    child.stderr.on('data', (chunk: string) => (stderr += chunk))
    const [code] = await once(child, 'exit')
    expect(code).toBe(1)
    expect(stderr).toContain('startup error')
  }, 15000)
})
