/**
 * End-to-end tests against a live server process.
 *
 * The suite spawns `serve --transport tcp` once, exercises the session
 * lifecycle (reset/score/stats, invariants, typed errors), then runs the
 * equivalence check: 1000 episodes scored over the wire must produce
 * byte-identical reward records to the offline grade command fed the
 * same instances and transcripts, with no episodes left open.
 */

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { ChildProcess, execFileSync, spawn } from 'child_process';
import * as fs from 'fs';
import * as net from 'net';
import * as os from 'os';
import * as path from 'path';
import {
  EnvClientError,
  EnvConnectionError,
  EnvProtocolError,
  EnvSession,
} from '../src/client';

const GAMES = [
  'sudoku',
  'nonogram',
  'cryptarithm',
  'magic_square',
  'zebra',
  'graph_connectivity',
  'knights_knaves',
];
const LEVELS = [1, 2, 3, 4, 5];

let server: ChildProcess;
let serverPort = 0;

beforeAll(async () => {
  server = spawn('python3', [
    '-m', 'puzzle_forge.cli', 'serve',
    '--transport', 'tcp', '--host', '127.0.0.1', '--port', '0',
  ]);
  serverPort = await new Promise<number>((resolve, reject) => {
    let banner = '';
    server.stdout!.setEncoding('utf8');
    server.stdout!.on('data', (chunk: string) => {
      banner += chunk;
      const match = banner.match(/listening on [\d.]+:(\d+)/);
      if (match) resolve(Number(match[1]));
    });
    server.on('error', reject);
    server.on('exit', (code) => reject(new Error(`server exited: ${code}`)));
  });
}, 30000);

afterAll(() => {
  if (server) server.kill();
});

function connect(): Promise<EnvSession> {
  return EnvSession.connect({ host: '127.0.0.1', port: serverPort });
}

/** Transcript the grader should accept in full: every step, then the answer. */
function oracleTranscript(solution: Record<string, string>): string {
  const keys = Object.keys(solution).sort();
  const steps = keys.map((k) => `STEP ${k}=${solution[k]}`);
  const answer = keys.map((k) => `${k}=${solution[k]}`).join('; ');
  return `${steps.join('\n')}\n<answer>${answer}</answer>`;
}

// ==================== Session lifecycle ====================

describe('session lifecycle', () => {
  it('reset returns a prompt and an episode id', async () => {
    const session = await connect();
    try {
      const result = await session.reset('graph_connectivity', 1, 9n);
      expect(result.episodeId).toMatch(/^ep-\d+$/);
      expect(result.prompt).toContain('edge list');
      expect(result.game).toBe('graph_connectivity');
      expect(result.level).toBe(1);
      expect(result.seed).toBe(9n);
      expect(session.hasOutstandingEpisode).toBe(true);
      expect(session.lastEpisodeId).toBe(result.episodeId);
    } finally {
      session.close();
    }
  });

  it('reset while an episode is outstanding is a client error', async () => {
    const session = await connect();
    try {
      await session.reset('magic_square', 1, 1n);
      await expect(session.reset('magic_square', 1, 2n)).rejects.toThrow(
        EnvClientError
      );
    } finally {
      session.close();
    }
  });

  it('score without an episode is a client error', async () => {
    const session = await connect();
    try {
      await expect(session.score('')).rejects.toThrow(EnvClientError);
    } finally {
      session.close();
    }
  });

  it('score clears the episode so the next reset is allowed', async () => {
    const session = await connect();
    try {
      await session.reset('magic_square', 1, 3n);
      const result = await session.score('');
      expect(result.breakdown.cumulative).toBe(0);
      expect(session.hasOutstandingEpisode).toBe(false);
      await session.reset('magic_square', 1, 4n);
      await session.score('');
    } finally {
      session.close();
    }
  });

  it('an oracle transcript earns the final reward', async () => {
    const session = await connect();
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'env-client-'));
    try {
      const out = path.join(dir, 'one.jsonl');
      execFileSync('python3', [
        '-m', 'puzzle_forge.cli', 'gen',
        '--game', 'magic_square', '--level', '1',
        '--count', '1', '--seed', '77', '--out', out,
      ]);
      const line = fs.readFileSync(out, 'utf8').trim();
      const solution = JSON.parse(line).solution as Record<string, string>;
      const seed = BigInt(line.match(/"seed":(\d+)/)![1]);
      await session.reset('magic_square', 1, seed);
      const result = await session.score(oracleTranscript(solution));
      expect(result.breakdown.r_final).toBe(1);
      expect(result.breakdown.per_step.every(([f, i]) => f === 1 && i === 1))
        .toBe(true);
    } finally {
      session.close();
      fs.rmSync(dir, { recursive: true, force: true });
    }
  });

  it('unknown games surface as protocol errors', async () => {
    const session = await connect();
    try {
      await expect(session.reset('minesweeper', 1)).rejects.toThrow(
        EnvProtocolError
      );
      expect(session.hasOutstandingEpisode).toBe(false);
    } finally {
      session.close();
    }
  });

  it('the game filter rejects before touching the wire', async () => {
    const session = await EnvSession.connect({
      host: '127.0.0.1',
      port: serverPort,
      games: ['sudoku'],
    });
    try {
      await expect(session.reset('zebra', 1)).rejects.toThrow(EnvClientError);
    } finally {
      session.close();
    }
  });

  it('server-auto sessions refuse explicit games and pick their own', async () => {
    const session = await EnvSession.connect({
      host: '127.0.0.1',
      port: serverPort,
      levelPolicy: 'server-auto',
    });
    try {
      await expect(session.reset('sudoku')).rejects.toThrow(EnvClientError);
      const result = await session.reset();
      expect(GAMES).toContain(result.game);
      const scored = await session.score('');
      expect(scored.breakdown.curriculum_level).toBeTypeOf('number');
    } finally {
      session.close();
    }
  });

  it('a dead endpoint is a connection error', async () => {
    const probe = net.createServer();
    const freePort = await new Promise<number>((resolve) => {
      probe.listen(0, '127.0.0.1', () => {
        const addr = probe.address() as net.AddressInfo;
        probe.close(() => resolve(addr.port));
      });
    });
    await expect(
      EnvSession.connect({ host: '127.0.0.1', port: freePort })
    ).rejects.toThrow(EnvConnectionError);
  });
});

// ==================== Equivalence with offline grading ====================

describe('equivalence with offline grading', () => {
  it(
    '1000 round-trips match the grade command byte for byte and leak nothing',
    async () => {
      const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'env-equiv-'));
      try {
        // offline instances: 29 per (game, level) cell, 1015 total
        interface Pair {
          game: string;
          level: number;
          seedDigits: string;
          solution: Record<string, string>;
        }
        const pairs: Pair[] = [];
        const instanceFiles: string[] = [];
        for (let g = 0; g < GAMES.length; g++) {
          for (const level of LEVELS) {
            const out = path.join(dir, `inst_${GAMES[g]}_${level}.jsonl`);
            instanceFiles.push(out);
            execFileSync('python3', [
              '-m', 'puzzle_forge.cli', 'gen',
              '--game', GAMES[g], '--level', String(level),
              '--count', '29', '--seed', String(7919 * level + 31 * g),
              '--out', out,
            ]);
            for (const line of fs.readFileSync(out, 'utf8').trim().split('\n')) {
              pairs.push({
                game: GAMES[g],
                level,
                seedDigits: line.match(/"seed":(\d+)/)![1],
                solution: JSON.parse(line).solution,
              });
            }
          }
        }
        const sample = pairs.slice(0, 1000);

        // transcript mix: full oracle, corrupted final, bogus steps, empty
        const transcripts = sample.map((pair, i) => {
          const kind = i % 4;
          if (kind === 0) return oracleTranscript(pair.solution);
          if (kind === 1) {
            const keys = Object.keys(pair.solution).sort();
            const mutated = { ...pair.solution };
            const victim = keys[i % keys.length];
            mutated[victim] = mutated[victim] + '?';
            return oracleTranscript(mutated);
          }
          if (kind === 2) {
            const keys = Object.keys(pair.solution).sort();
            return keys.map((k) => `STEP ${k}=maybe`).join('\n');
          }
          return '';
        });

        // wire route, one session for all 1000 episodes
        const session = await connect();
        const wireRecords: string[] = [];
        try {
          for (let i = 0; i < sample.length; i++) {
            const pair = sample[i];
            const reset = await session.reset(
              pair.game, pair.level, BigInt(pair.seedDigits)
            );
            expect(reset.seed.toString()).toBe(pair.seedDigits);
            const scored = await session.score(transcripts[i]);
            wireRecords.push(scored.raw.replace(/"episode_id":"[^"]*",/, ''));
          }
          const stats = await session.stats();
          expect(stats.openEpisodes).toBe(0);
          expect(stats.served).toBe(1000);
          expect(session.hasOutstandingEpisode).toBe(false);
        } finally {
          session.close();
        }

        // offline route over the same pairs, seeds spliced in as raw digits
        const instancesAll = path.join(dir, 'all.jsonl');
        fs.writeFileSync(
          instancesAll,
          instanceFiles.map((f) => fs.readFileSync(f, 'utf8')).join('')
        );
        const transcriptLines = sample.map((pair, i) =>
          `{"game":${JSON.stringify(pair.game)},"seed":${pair.seedDigits},` +
          `"transcript":${JSON.stringify(transcripts[i])}}`
        );
        const transcriptsPath = path.join(dir, 'transcripts.jsonl');
        fs.writeFileSync(transcriptsPath, transcriptLines.join('\n') + '\n');
        const gradedPath = path.join(dir, 'graded.jsonl');
        execFileSync('python3', [
          '-m', 'puzzle_forge.cli', 'grade',
          '--instances', instancesAll,
          '--transcripts', transcriptsPath,
          '--out', gradedPath,
        ]);
        const gradedLines = fs
          .readFileSync(gradedPath, 'utf8')
          .trim()
          .split('\n');
        expect(gradedLines.length).toBe(1001); // 1000 records + summary
        const offlineRecords = gradedLines.slice(0, 1000);

        let mismatches = 0;
        for (let i = 0; i < 1000; i++) {
          if (wireRecords[i] !== offlineRecords[i]) mismatches++;
        }
        expect(mismatches).toBe(0);
      } finally {
        fs.rmSync(dir, { recursive: true, force: true });
      }
    },
    600000
  );
});
