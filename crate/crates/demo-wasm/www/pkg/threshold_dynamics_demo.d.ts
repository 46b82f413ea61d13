/* tslint:disable */
/* eslint-disable */

/**
 * A phase on the unit square evolving under the MBO scheme.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    area(): number;
    components(): number;
    constructor(shape: string, cells: number, h: number);
    /**
     * Adds (or erases) a disk of cells around `(x, y)` in unit coordinates.
     */
    paint(x: number, y: number, radius: number, add: boolean): void;
    /**
     * RGBA pixels, row 0 at the top (largest y).
     */
    pixels(): Uint8Array;
    set_h(h: number): void;
    step(n: number): void;
    steps(): number;
    time(): number;
}

/**
 * Radius of a circle after time `t` of curvature flow.
 */
export function exact_radius(r0: number, t: number): number;

/**
 * Radius after one exact MBO step on a disk, or `NaN` at extinction.
 */
export function oracle_step(r0: number, h: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly exact_radius: (a: number, b: number) => [number, number, number];
    readonly oracle_step: (a: number, b: number) => [number, number, number];
    readonly simulation_area: (a: number) => number;
    readonly simulation_components: (a: number) => [number, number, number];
    readonly simulation_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly simulation_paint: (a: number, b: number, c: number, d: number, e: number) => void;
    readonly simulation_pixels: (a: number) => [number, number];
    readonly simulation_set_h: (a: number, b: number) => void;
    readonly simulation_step: (a: number, b: number) => [number, number];
    readonly simulation_steps: (a: number) => number;
    readonly simulation_time: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
