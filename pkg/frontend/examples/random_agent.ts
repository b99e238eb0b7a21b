/**
 * Random-agent episode loop.
 *
 * Spawns the environment server (or connects to one given --host/--port),
 * then plays graph connectivity episodes by coin flip: the prompt says the
 * answer is `connected=yes` or `connected=no`, so guessing needs no game
 * knowledge and lands the final reward about half the time.
 *
 *   npm run example -- --episodes 20 --seed 7
 */

import { spawn, ChildProcess } from 'child_process';
import { EnvSession } from '../src/client';

interface Args {
  episodes: number;
  seed: number;
  host: string | null;
  port: number | null;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { episodes: 10, seed: 1, host: null, port: null };
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (key === '--episodes') args.episodes = Number(value);
    else if (key === '--seed') args.seed = Number(value);
    else if (key === '--host') args.host = value;
    else if (key === '--port') args.port = Number(value);
    else throw new Error(`unknown flag ${key}`);
  }
  return args;
}

/** Start `serve --transport tcp` and wait for its announce line. */
function spawnServer(): Promise<{ proc: ChildProcess; host: string; port: number }> {
  return new Promise((resolve, reject) => {
    const proc = spawn('python3', [
      '-m', 'puzzle_forge.cli', 'serve',
      '--transport', 'tcp', '--host', '127.0.0.1', '--port', '0',
    ]);
    let banner = '';
    proc.stdout!.setEncoding('utf8');
    proc.stdout!.on('data', (chunk: string) => {
      banner += chunk;
      const match = banner.match(/listening on ([\d.]+):(\d+)/);
      if (match) {
        resolve({ proc, host: match[1], port: Number(match[2]) });
      }
    });
    proc.on('error', reject);
    proc.on('exit', (code) => reject(new Error(`server exited early: ${code}`)));
  });
}

/** xorshift step, enough randomness for a coin flip. */
function nextBit(state: { x: number }): number {
  state.x ^= state.x << 13;
  state.x ^= state.x >>> 17;
  state.x ^= state.x << 5;
  state.x >>>= 0;
  return state.x & 1;
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  let server: { proc: ChildProcess; host: string; port: number } | null = null;
  let host = args.host;
  let port = args.port;
  if (host === null || port === null) {
    server = await spawnServer();
    host = server.host;
    port = server.port;
    console.log(`spawned server on ${host}:${port}`);
  }

  const session = await EnvSession.connect({ host, port });
  const rng = { x: args.seed || 1 };
  let hits = 0;
  try {
    for (let episode = 0; episode < args.episodes; episode++) {
      const reset = await session.reset(
        'graph_connectivity', 1, BigInt(args.seed + episode)
      );
      const guess = nextBit(rng) ? 'yes' : 'no';
      const transcript = `STEP connected=${guess}\n<answer>connected=${guess}</answer>`;
      const result = await session.score(transcript);
      const b = result.breakdown;
      hits += b.r_final;
      console.log(
        `${reset.episodeId}  guess=${guess}  r_final=${b.r_final}  ` +
        `cumulative=${b.cumulative}`
      );
    }
    const stats = await session.stats();
    console.log(
      `${hits}/${args.episodes} finals correct; ` +
      `server saw ${stats.served} episodes, ${stats.openEpisodes} left open`
    );
  } finally {
    session.close();
    if (server) server.proc.kill();
  }
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
