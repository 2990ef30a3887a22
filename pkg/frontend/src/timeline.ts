/**
 * Timeline layout: pure geometry from annotation times to pixel segments.
 *
 * Positions derive linearly from time (x = time / duration * width) and
 * lanes are assigned greedy first-fit over annotations sorted by start
 * time, so the same annotations always produce the same picture.
 */

import type { Annotation, AnnotationMode } from "./api.js";
import { annotationSpan } from "./api.js";

export const MIN_INSTANT_PX = 2;

export const MODE_COLOR: Record<AnnotationMode, string> = {
  visual: "#2f6fde",
  audible: "#d97706",
  conceptual: "#059669",
};

export interface TimelineInput {
  id: string;
  start: number;
  end: number;
  mode: AnnotationMode;
}

export interface TimelineSegment {
  id: string;
  x: number;
  width: number;
  lane: number;
  color: string;
  /** true when the annotation's times fell outside [0, duration] */
  clamped: boolean;
}

export function toTimelineInput(annotation: Annotation): TimelineInput {
  const span = annotationSpan(annotation);
  return { id: annotation.id, start: span.start, end: span.end, mode: annotation.mode };
}

function clampTime(value: number, duration: number): number {
  return Math.min(Math.max(value, 0), duration);
}

export function timelineLayout(
  items: readonly TimelineInput[],
  durationSeconds: number,
  widthPx: number,
): TimelineSegment[] {
  if (!(durationSeconds > 0)) {
    throw new RangeError("duration must be positive");
  }
  if (!(widthPx > 0)) {
    throw new RangeError("width must be positive");
  }
  const ordered = [...items].sort(
    (a, b) => a.start - b.start || a.end - b.end || (a.id < b.id ? -1 : a.id > b.id ? 1 : 0),
  );
  const laneRight: number[] = [];
  const segments: TimelineSegment[] = [];
  for (const item of ordered) {
    const clamped =
      item.start < 0 || item.end > durationSeconds || item.start > durationSeconds;
    const startSec = clampTime(item.start, durationSeconds);
    const endSec = Math.max(clampTime(item.end, durationSeconds), startSec);
    let x = (startSec / durationSeconds) * widthPx;
    let width = (endSec / durationSeconds) * widthPx - x;
    if (item.start === item.end) {
      width = Math.max(width, MIN_INSTANT_PX);
    }
    if (x + width > widthPx) {
      x = widthPx - width; // keep the minimum-width marker on the canvas
    }
    let lane = laneRight.findIndex((right) => right <= x);
    if (lane === -1) {
      lane = laneRight.length;
      laneRight.push(0);
    }
    laneRight[lane] = x + width;
    segments.push({
      id: item.id,
      x,
      width,
      lane,
      color: MODE_COLOR[item.mode],
      clamped,
    });
  }
  return segments;
}

export function laneCount(segments: readonly TimelineSegment[]): number {
  return segments.reduce((most, segment) => Math.max(most, segment.lane + 1), 0);
}
