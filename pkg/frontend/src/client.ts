/**
 * Client for the puzzle environment protocol.
 *
 * Speaks line-delimited JSON over TCP to a `serve --transport tcp`
 * process. A session runs episodes one at a time: reset() hands back a
 * prompt and an episode id, score() submits a transcript and returns
 * the server's reward breakdown verbatim. No grading happens on this
 * side; every reward number is computed by the server, so the two ends
 * cannot drift apart.
 *
 * Usage:
 * ```ts
 * const session = await EnvSession.connect({ host: '127.0.0.1', port: 5555 });
 * const { prompt, episodeId } = await session.reset('magic_square', 1, 42n);
 * const result = await session.score('STEP R1C1=8\n<answer>R1C1=8</answer>');
 * console.log(result.breakdown.cumulative);
 * session.close();
 * ```
 */

import * as net from 'net';

// ==================== Types ====================

/**
 * How reset() picks difficulty.
 * 'fixed' sends an explicit game and level with every reset;
 * 'server-auto' lets the server run its own curriculum and choose both.
 */
export type LevelPolicy = 'fixed' | 'server-auto';

/** Connection and session configuration. */
export interface SessionOptions {
  host: string;
  port: number;
  /** Games this session may request; omit to allow any. */
  games?: string[];
  /** Defaults to 'fixed'. */
  levelPolicy?: LevelPolicy;
  /** Socket connect timeout, milliseconds. Defaults to 10000. */
  connectTimeoutMs?: number;
}

/** Outcome of reset(): a fresh episode awaiting a transcript. */
export interface ResetResult {
  episodeId: string;
  prompt: string;
  game: string;
  level: number;
  /** Instance seed; 64-bit, hence bigint. */
  seed: bigint;
}

/** Reward breakdown as graded by the server. */
export interface RewardBreakdown {
  game: string;
  seed: bigint;
  level: number;
  /** One [format, intermediate] pair per transcript step. */
  per_step: [number, number][];
  r_final: number;
  cumulative: number;
  discounted_return: number;
  gamma: number;
  /** Present when the session runs the server-side curriculum. */
  curriculum_level?: number;
  advanced?: boolean;
}

/** Outcome of score(): the breakdown plus the raw response line. */
export interface ScoreResult {
  episodeId: string;
  breakdown: RewardBreakdown;
  /** Exact bytes of the server's response line, for log replay. */
  raw: string;
}

/** Session counters as reported by the server. */
export interface SessionStats {
  openEpisodes: number;
  served: number;
}

// ==================== Errors ====================

/** The server answered with an error object. */
export class EnvProtocolError extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(`${code}: ${message}`);
    this.name = 'EnvProtocolError';
    this.code = code;
  }
}

/** The session was used out of order (e.g. reset while an episode is open). */
export class EnvClientError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'EnvClientError';
  }
}

/** The socket could not be opened, or dropped mid-request. */
export class EnvConnectionError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'EnvConnectionError';
  }
}

/** The server's reply was not parseable JSON. */
export class EnvDecodeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'EnvDecodeError';
  }
}

// ==================== Wire helpers ====================

/** JSON-encode a request, writing bigint fields as bare integers. */
function encodeRequest(fields: [string, string | number | bigint][]): string {
  const parts = fields.map(([key, value]) => {
    const body =
      typeof value === 'bigint' ? value.toString() : JSON.stringify(value);
    return `${JSON.stringify(key)}:${body}`;
  });
  return `{${parts.join(',')}}`;
}

/**
 * Parse a response line, lifting the top-level "seed" member to bigint.
 *
 * Seeds are unsigned 64-bit and overflow the double mantissa, so the
 * digits are quoted before JSON.parse sees them. The server serializes
 * with sorted keys and no whitespace, which makes the member boundary
 * unambiguous.
 */
function decodeResponse(line: string): Record<string, unknown> {
  const guarded = line.replace(/"seed":(\d+)/, '"seed":"$1"');
  let parsed: unknown;
  try {
    parsed = JSON.parse(guarded);
  } catch (e) {
    throw new EnvDecodeError(`unparseable server reply: ${e}`);
  }
  if (parsed === null || typeof parsed !== 'object' || Array.isArray(parsed)) {
    throw new EnvDecodeError('server reply is not a JSON object');
  }
  const record = parsed as Record<string, unknown>;
  if (typeof record.seed === 'string') {
    record.seed = BigInt(record.seed);
  }
  return record;
}

// ==================== Session ====================

/**
 * One protocol session over one TCP connection.
 *
 * Holds at most one outstanding episode: reset() refuses while an
 * episode is open, score() refuses while none is. Requests are sent
 * strictly one at a time; the session is not meant to be shared across
 * concurrent callers.
 */
export class EnvSession {
  private socket: net.Socket;
  private readonly gameFilter: Set<string> | null;
  private readonly levelPolicy: LevelPolicy;
  private outstanding: string | null = null;
  private lastEpisode: string | null = null;
  private closed = false;

  private recvBuffer = '';
  private waiters: {
    resolve: (line: string) => void;
    reject: (err: Error) => void;
  }[] = [];
  private sendChain: Promise<unknown> = Promise.resolve();

  private constructor(socket: net.Socket, options: SessionOptions) {
    this.socket = socket;
    this.gameFilter = options.games ? new Set(options.games) : null;
    this.levelPolicy = options.levelPolicy ?? 'fixed';

    socket.setEncoding('utf8');
    socket.on('data', (chunk: string) => this.onData(chunk));
    socket.on('error', (err: Error) =>
      this.failWaiters(new EnvConnectionError(`socket error: ${err.message}`))
    );
    socket.on('close', () =>
      this.failWaiters(new EnvConnectionError('connection closed by server'))
    );
  }

  /** Open a connection; rejects with EnvConnectionError when it cannot. */
  static connect(options: SessionOptions): Promise<EnvSession> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({
        host: options.host,
        port: options.port,
      });
      const timeoutMs = options.connectTimeoutMs ?? 10000;
      const timer = setTimeout(() => {
        socket.destroy();
        reject(
          new EnvConnectionError(
            `connect to ${options.host}:${options.port} timed out`
          )
        );
      }, timeoutMs);
      socket.once('connect', () => {
        clearTimeout(timer);
        resolve(new EnvSession(socket, options));
      });
      socket.once('error', (err: Error) => {
        clearTimeout(timer);
        reject(
          new EnvConnectionError(
            `connect to ${options.host}:${options.port} failed: ${err.message}`
          )
        );
      });
    });
  }

  /** Episode id of the most recent reset, or null before the first. */
  get lastEpisodeId(): string | null {
    return this.lastEpisode;
  }

  /** True while an episode is open and waiting for score(). */
  get hasOutstandingEpisode(): boolean {
    return this.outstanding !== null;
  }

  /**
   * Start an episode.
   *
   * Under the 'fixed' policy a game is required and level defaults to
   * the server's starting difficulty; under 'server-auto' both must be
   * omitted because the server's curriculum picks them.
   */
  async reset(
    game?: string,
    level?: number,
    seed?: number | bigint
  ): Promise<ResetResult> {
    if (this.outstanding !== null) {
      throw new EnvClientError(
        `episode ${this.outstanding} is still open; score it before reset`
      );
    }
    const fields: [string, string | number | bigint][] = [['cmd', 'reset']];
    if (this.levelPolicy === 'server-auto') {
      if (game !== undefined || level !== undefined) {
        throw new EnvClientError(
          'game and level are chosen by the server under server-auto'
        );
      }
      fields.push(['curriculum', 'auto']);
    } else {
      if (game === undefined) {
        throw new EnvClientError('game is required under the fixed policy');
      }
      if (this.gameFilter && !this.gameFilter.has(game)) {
        throw new EnvClientError(`game ${game} is outside this session's filter`);
      }
      fields.push(['game', game]);
      if (level !== undefined) {
        fields.push(['level', level]);
      }
    }
    if (seed !== undefined) {
      fields.push(['seed', seed]);
    }
    const reply = await this.request(encodeRequest(fields));
    const record = decodeResponse(reply);
    if (typeof record.error === 'string') {
      throw new EnvProtocolError(record.error, String(record.msg ?? ''));
    }
    const episodeId = String(record.episode_id);
    this.outstanding = episodeId;
    this.lastEpisode = episodeId;
    return {
      episodeId,
      prompt: String(record.prompt),
      game: String(record.game),
      level: Number(record.level),
      seed: record.seed as bigint,
    };
  }

  /**
   * Grade the open episode and close it.
   *
   * Returns the server's breakdown verbatim. The episode is cleared on
   * success, and also when the server reports it no longer exists, so
   * a desynced session can recover with a fresh reset.
   */
  async score(transcript: string): Promise<ScoreResult> {
    if (this.outstanding === null) {
      throw new EnvClientError('no open episode; call reset first');
    }
    const episodeId = this.outstanding;
    const line = encodeRequest([
      ['cmd', 'score'],
      ['episode_id', episodeId],
      ['transcript', transcript],
    ]);
    const reply = await this.request(line);
    const record = decodeResponse(reply);
    if (typeof record.error === 'string') {
      if (record.error === 'no_such_episode') {
        this.outstanding = null;
      }
      throw new EnvProtocolError(record.error, String(record.msg ?? ''));
    }
    this.outstanding = null;
    return {
      episodeId: String(record.episode_id),
      breakdown: record as unknown as RewardBreakdown,
      raw: reply,
    };
  }

  /** Fetch the server's open-episode and served counters. */
  async stats(): Promise<SessionStats> {
    const reply = await this.request(encodeRequest([['cmd', 'stats']]));
    const record = decodeResponse(reply);
    if (typeof record.error === 'string') {
      throw new EnvProtocolError(record.error, String(record.msg ?? ''));
    }
    return {
      openEpisodes: Number(record.open_episodes),
      served: Number(record.served),
    };
  }

  /** Tear down the connection. Safe to call twice. */
  close(): void {
    if (!this.closed) {
      this.closed = true;
      this.socket.destroy();
    }
  }

  // ==================== Plumbing ====================

  private onData(chunk: string): void {
    this.recvBuffer += chunk;
    let cut: number;
    while ((cut = this.recvBuffer.indexOf('\n')) >= 0) {
      const line = this.recvBuffer.slice(0, cut).replace(/\r$/, '');
      this.recvBuffer = this.recvBuffer.slice(cut + 1);
      const waiter = this.waiters.shift();
      if (waiter) {
        waiter.resolve(line);
      }
    }
  }

  private failWaiters(err: Error): void {
    const pending = this.waiters;
    this.waiters = [];
    for (const waiter of pending) {
      waiter.reject(err);
    }
  }

  /** Send one line and await one line; requests never interleave. */
  private request(line: string): Promise<string> {
    const run = this.sendChain.then(
      () =>
        new Promise<string>((resolve, reject) => {
          if (this.closed || this.socket.destroyed) {
            reject(new EnvConnectionError('session is closed'));
            return;
          }
          this.waiters.push({ resolve, reject });
          this.socket.write(line + '\n');
        })
    );
    // keep the chain alive past rejections so later requests still run
    this.sendChain = run.catch(() => undefined);
    return run;
  }
}
