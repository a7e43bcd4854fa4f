import type { Meta, RenderParams } from "./api.js";

export const THETA_STEP = 0.5;
export const SPEED_STEP = 0.01;
export const FILTER_U_MAX = 45;

export interface TunerState {
  thetaDeg: number;
  speedMps: number;
  /** upper end of the speed slider and of the auto-estimate search box */
  speedMax: number;
  filterOn: boolean;
  filterUDeg: number;
  windowFrom: number;
  windowTo: number;
  nFrames: number;
}

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

export function snapTheta(v: number): number {
  // round-to-step in integer space so 119.74 -> 119.5, not 119.49999...
  return clamp(Math.round(v / THETA_STEP) * THETA_STEP, 0, 360);
}

export function snapSpeed(v: number, max: number): number {
  return clamp(Math.round(v / SPEED_STEP) * SPEED_STEP, 0, max);
}

export function snapFilterU(v: number): number {
  return clamp(v, 0, FILTER_U_MAX);
}

export function clampWindow(from: number, to: number, nFrames: number): [number, number] {
  const f = clamp(Math.round(from), 0, nFrames - 1);
  const t = clamp(Math.round(to), f, nFrames - 1);
  return [f, t];
}

export function initialState(meta: Meta, speedMax = 1.0): TunerState {
  return {
    thetaDeg: 0,
    speedMps: 0,
    speedMax,
    filterOn: false,
    filterUDeg: 15,
    windowFrom: 0,
    windowTo: meta.n_frames - 1,
    nFrames: meta.n_frames,
  };
}

/** The request this state describes; filter_u rides along only when active. */
export function renderParams(s: TunerState): RenderParams {
  return {
    thetaDeg: s.thetaDeg,
    speedMps: s.speedMps,
    from: s.windowFrom,
    to: s.windowTo,
    filterU: s.filterOn ? s.filterUDeg : null,
  };
}

export interface ParamPatch {
  thetaDeg?: number;
  speedMps?: number;
  speedMax?: number;
  filterOn?: boolean;
  filterUDeg?: number;
  windowFrom?: number;
  windowTo?: number;
}

export function applyPatch(s: TunerState, patch: ParamPatch): TunerState {
  const next = { ...s, ...patch };
  next.speedMax = Math.max(SPEED_STEP, next.speedMax);
  next.thetaDeg = patch.thetaDeg !== undefined ? snapTheta(patch.thetaDeg) : next.thetaDeg;
  next.speedMps = snapSpeed(patch.speedMps !== undefined ? patch.speedMps : next.speedMps, next.speedMax);
  next.filterUDeg = patch.filterUDeg !== undefined ? snapFilterU(patch.filterUDeg) : next.filterUDeg;
  [next.windowFrom, next.windowTo] = clampWindow(next.windowFrom, next.windowTo, next.nFrames);
  return next;
}
