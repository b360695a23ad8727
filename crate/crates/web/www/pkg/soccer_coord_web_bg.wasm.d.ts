/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const field: () => [number, number];
export const inspect_ball: (a: number, b: number, c: number) => [number, number];
export const localization_walk: (a: bigint, b: number) => [number, number];
export const run_scenario: (a: number, b: number, c: bigint, d: number) => [number, number];
export const scenario_names: () => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
