// Robot face drawn from Action Unit intensities on a 2D canvas.
// AU12 pulls the mouth corners up, AU15 down, AU25/26 open the mouth,
// AU1/2 lift the brows, AU4 knits them, AU6 raises the cheeks.

import type { AUMap } from "./protocol.js";

export interface FaceGeometry {
  browLift: number; // 0..1
  browFurrow: number; // 0..1
  eyeOpenness: number; // 0.5..1
  smile: number; // -1..1, negative is a frown
  mouthOpen: number; // 0..1
}

function au(map: AUMap, id: number): number {
  const v = map[String(id)];
  return typeof v === "number" ? Math.min(1, Math.max(0, v)) : 0;
}

export function faceGeometry(map: AUMap): FaceGeometry {
  return {
    browLift: (au(map, 1) + au(map, 2)) / 2,
    browFurrow: au(map, 4),
    eyeOpenness: 0.7 + 0.3 * Math.max(au(map, 1), au(map, 2)),
    smile: au(map, 12) + 0.4 * au(map, 6) - au(map, 15),
    mouthOpen: Math.max(au(map, 25), au(map, 26)),
  };
}

export function drawFace(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  map: AUMap,
  mouthOverride: number | null = null,
): void {
  const g = faceGeometry(map);
  const cx = width / 2;
  const cy = height / 2;
  const unit = Math.min(width, height) / 10;

  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#14202e";
  ctx.fillRect(0, 0, width, height);

  // eyes
  const eyeY = cy - unit * 1.2;
  const eyeR = unit * 1.1;
  for (const side of [-1, 1]) {
    const ex = cx + side * unit * 2.2;
    ctx.fillStyle = "#e8f4ff";
    ctx.beginPath();
    ctx.ellipse(ex, eyeY, eyeR, eyeR * g.eyeOpenness, 0, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#18314a";
    ctx.beginPath();
    ctx.arc(ex, eyeY, eyeR * 0.45, 0, Math.PI * 2);
    ctx.fill();

    // brow: lifted by AU1/2, inner end pulled down by AU4
    const browY = eyeY - eyeR * (1.5 + g.browLift);
    const innerDrop = g.browFurrow * unit * 0.8;
    ctx.strokeStyle = "#9fc3e8";
    ctx.lineWidth = unit * 0.35;
    ctx.beginPath();
    ctx.moveTo(ex + side * eyeR, browY); // outer end
    ctx.lineTo(ex - side * eyeR, browY + innerDrop); // inner end, toward nose
    ctx.stroke();
  }

  // mouth
  const open = mouthOverride !== null ? mouthOverride : g.mouthOpen;
  const mouthY = cy + unit * 2.2;
  const mouthW = unit * 2.6;
  ctx.strokeStyle = "#e8f4ff";
  ctx.fillStyle = "#0b1420";
  ctx.lineWidth = unit * 0.35;
  if (open > 0.05) {
    ctx.beginPath();
    ctx.ellipse(cx, mouthY, mouthW * 0.7, unit * (0.3 + open * 1.4), 0, 0, Math.PI * 2);
    ctx.fill();
    ctx.stroke();
  } else {
    const bend = g.smile * unit * 1.6;
    ctx.beginPath();
    ctx.moveTo(cx - mouthW, mouthY - bend * 0.4);
    ctx.quadraticCurveTo(cx, mouthY + bend, cx + mouthW, mouthY - bend * 0.4);
    ctx.stroke();
  }
}
