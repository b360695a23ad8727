/* tslint:disable */
/* eslint-disable */

export function field(): string;

/**
 * Team-play geometry for a ball placed at `(x, y)`. `defender_x` is where the
 * second field player stands; behind the presence line it blocks Region-2
 * clear-outs.
 */
export function inspect_ball(x: number, y: number, defender_x: number): string;

/**
 * Seeded 60 s circular walk from the center-circle placement with the
 * four-hypothesis bank; `sigma_range` sets the range noise of all landmarks.
 */
export function localization_walk(seed: bigint, sigma_range: number): string;

/**
 * Runs a bundled scenario and returns every control tick for playback.
 */
export function run_scenario(name: string, seed: bigint, teamplay: boolean): string;

export function scenario_names(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly field: () => [number, number];
    readonly inspect_ball: (a: number, b: number, c: number) => [number, number];
    readonly localization_walk: (a: bigint, b: number) => [number, number];
    readonly run_scenario: (a: number, b: number, c: bigint, d: number) => [number, number];
    readonly scenario_names: () => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
