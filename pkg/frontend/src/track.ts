// The game is one-dimensional: a horizontal track whose pixel span maps
// affinely onto the normalized position interval [-0.5, 0.5].

export interface TrackGeometry {
  left: number;
  width: number;
}

export function pointerToPosition(pixelX: number, track: TrackGeometry): number {
  if (track.width <= 0) throw new Error("track width must be positive");
  const frac = (pixelX - track.left) / track.width;
  return Math.min(Math.max(frac, 0), 1) - 0.5;
}

export function positionToPixel(x: number, track: TrackGeometry): number {
  return track.left + (x + 0.5) * track.width;
}
