/**
 * Plugin entry point.
 *
 *   node dist/main.js --backend stub [--image-size WxH]
 *   node dist/main.js --backend http --model-url http://host:port [--score-threshold 0.3]
 *   node dist/main.js --selftest
 *
 * Startup failures (unreachable model server, bad arguments) report on
 * stderr and exit nonzero before any request is read.
 */

import { AdapterConfig, Backend, stubBackend } from './backends'
import { checkModelServer, httpBackend } from './httpBackend'
import { runSelftest } from './selftest'
import { serve } from './server'

function parseArgs(argv: string[]): { config: AdapterConfig; selftest: boolean } {
  const config: AdapterConfig = {
    backend: 'stub',
    model: '',
    device: 'cpu',
    scoreThreshold: 0.0,
    timeoutMs: 30_000,
  }
  let selftest = false
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]
    const next = () => {
      i += 1
      if (i >= argv.length) throw new Error(`${arg} needs a value`)
      return argv[i]
    }
    switch (arg) {
      case '--backend': {
        const value = next()
        if (value !== 'stub' && value !== 'http') throw new Error(`unknown backend '${value}'`)
        config.backend = value
        break
      }
      case '--model-url':
        config.model = next()
        break
      case '--device':
        config.device = next()
        break
      case '--score-threshold':
        config.scoreThreshold = Number(next())
        if (!(config.scoreThreshold >= 0 && config.scoreThreshold <= 1)) {
          throw new Error('--score-threshold must lie in [0, 1]')
        }
        break
      case '--timeout-ms':
        config.timeoutMs = Number(next())
        break
      case '--image-size': {
        const match = /^(\d+)x(\d+)$/.exec(next())
        if (!match) throw new Error('--image-size expects WxH, e.g. 640x480')
        config.imageSize = { width: Number(match[1]), height: Number(match[2]) }
        break
      }
      case '--selftest':
        selftest = true
        break
      default:
        throw new Error(`unknown argument '${arg}'`)
    }
  }
  return { config, selftest }
}

async function buildBackend(config: AdapterConfig): Promise<Backend> {
  if (config.backend === 'http') {
    if (!config.model) throw new Error('http backend needs --model-url')
    await checkModelServer(config)
    return httpBackend(config)
  }
  return stubBackend(config)
}

async function main(): Promise<void> {
  let parsed
  try {
    parsed = parseArgs(process.argv.slice(2))
  } catch (err) {
    process.stderr.write(`argument error: ${err instanceof Error ? err.message : err}\n`)
    process.exit(2)
  }

  if (parsed.selftest) {
    const size = parsed.config.imageSize ?? { width: 64, height: 48 }
    const backend = stubBackend({ ...parsed.config, backend: 'stub', imageSize: size })
    const results = await runSelftest(backend, size)
    for (const result of results) {
      process.stdout.write(`${result.passed ? 'PASS' : 'FAIL'} ${result.name}`
        + (result.detail && !result.passed ? `: ${result.detail}` : '') + '\n')
    }
    process.exit(results.every((r) => r.passed) ? 0 : 1)
  }

  let backend: Backend
  try {
    backend = await buildBackend(parsed.config)
  } catch (err) {
    process.stderr.write(`startup error: ${err instanceof Error ? err.message : err}\n`)
    process.exit(1)
  }
  serve(backend, { onExit: () => process.exit(0) })
}

main()
