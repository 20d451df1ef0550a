/**
 * Stdio request loop: single-threaded by contract, one request in flight.
 * Requests are answered strictly in arrival order; the loop drains and
 * exits cleanly when stdin closes.
 */

import { Backend } from './backends'
import { handleLine } from './handler'
import { createLineSplitter } from './protocol'

export function serve(backend: Backend, options?: { onExit?: () => void }): void {
  let queue: Promise<void> = Promise.resolve()
  const push = createLineSplitter((line) => {
    queue = queue.then(async () => {
      const response = await handleLine(line, backend)
      process.stdout.write(response + '\n')
    })
  })

  process.stdin.setEncoding('utf8')
  process.stdin.on('data', push)
  process.stdin.on('end', () => {
    queue.then(() => {
      options?.onExit?.()
    })
  })
}
