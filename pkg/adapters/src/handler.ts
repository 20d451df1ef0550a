/**
 * One request line in, one response line out. Backend failures become
 * protocol error responses rather than crashes; the plugin stays alive.
 */

import { Backend } from './backends'
import {
  ProtocolError,
  errorResponse,
  parseRequest,
  salvageId,
  segmentResponse,
  verifyResponse,
} from './protocol'

export async function handleLine(line: string, backend: Backend): Promise<string> {
  let request
  try {
    request = parseRequest(line)
  } catch (err) {
    const message = err instanceof ProtocolError ? err.message : String(err)
    return errorResponse(salvageId(line), message)
  }
  try {
    if (request.op === 'verify') {
      return verifyResponse(request.id, await backend.verify(request))
    }
    return segmentResponse(request.id, await backend.segment(request))
  } catch (err) {
    return errorResponse(request.id, err instanceof Error ? err.message : String(err))
  }
}
