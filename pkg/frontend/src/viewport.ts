// Neutral 3D viewport on a plain 2D canvas: orthographic projection with a
// painter's sort, orbit via drag, zoom via wheel. It only transforms server
// geometry for display; nothing geometric is computed client-side.

import type { MeshJson } from "./types.js";

interface OverlayCircle {
  radius: number;
  planeY: number;
  color: string;
}

export class Viewport {
  private yaw = 0.7;
  private pitch = 0.45;
  private zoom = 1.0;
  private mesh: MeshJson | null = null;
  private rings: number[][][] = [];
  private overlays: OverlayCircle[] = [];
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(private canvas: HTMLCanvasElement) {
    canvas.addEventListener("mousedown", (event) => {
      this.dragging = true;
      this.lastX = event.clientX;
      this.lastY = event.clientY;
    });
    window.addEventListener("mouseup", () => (this.dragging = false));
    window.addEventListener("mousemove", (event) => {
      if (!this.dragging) return;
      this.yaw += (event.clientX - this.lastX) * 0.01;
      this.pitch += (event.clientY - this.lastY) * 0.01;
      this.pitch = Math.max(-1.5, Math.min(1.5, this.pitch));
      this.lastX = event.clientX;
      this.lastY = event.clientY;
      this.render();
    });
    canvas.addEventListener("wheel", (event) => {
      event.preventDefault();
      this.zoom *= event.deltaY < 0 ? 1.1 : 0.9;
      this.render();
    });
  }

  setMesh(mesh: MeshJson | null): void {
    this.mesh = mesh;
    this.render();
  }

  setRings(rings: number[][][]): void {
    this.rings = rings;
    this.render();
  }

  setOverlays(innerRadius: number | null, boundRadius: number | null, planeY = 0): void {
    this.overlays = [];
    if (innerRadius != null) {
      this.overlays.push({ radius: innerRadius, planeY, color: "#2dd4bf" });
    }
    if (boundRadius != null) {
      this.overlays.push({ radius: boundRadius, planeY, color: "#f59e0b" });
    }
    this.render();
  }

  clear(): void {
    this.mesh = null;
    this.rings = [];
    this.render();
  }

  private project(point: number[], center: number[], scale: number): [number, number, number] {
    // World y is the stacking axis and renders as screen-up.
    const x = point[0] - center[0];
    const y = point[1] - center[1];
    const z = point[2] - center[2];
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    const rx = cy * x + sy * z;
    const rz = -sy * x + cy * z;
    const ry = cp * y - sp * rz;
    const depth = sp * y + cp * rz;
    const w = this.canvas.width;
    const h = this.canvas.height;
    return [w / 2 + rx * scale, h / 2 - ry * scale, depth];
  }

  private frame(): { center: number[]; scale: number } {
    const points: number[][] = [];
    if (this.mesh) points.push(...this.mesh.vertices);
    for (const ring of this.rings) points.push(...ring);
    for (const overlay of this.overlays) {
      points.push([overlay.radius, overlay.planeY, overlay.radius]);
      points.push([-overlay.radius, overlay.planeY, -overlay.radius]);
    }
    if (!points.length) return { center: [0, 0, 0], scale: 1 };
    const lo = [Infinity, Infinity, Infinity];
    const hi = [-Infinity, -Infinity, -Infinity];
    for (const p of points) {
      for (let axis = 0; axis < 3; axis++) {
        lo[axis] = Math.min(lo[axis], p[axis]);
        hi[axis] = Math.max(hi[axis], p[axis]);
      }
    }
    const center = [0, 1, 2].map((axis) => (lo[axis] + hi[axis]) / 2);
    const extent = Math.max(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], 1e-6);
    const scale = (Math.min(this.canvas.width, this.canvas.height) * 0.42 * this.zoom) / extent;
    return { center, scale };
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, width, height);
    const { center, scale } = this.frame();

    if (this.mesh) {
      const projected = this.mesh.vertices.map((v) => this.project(v, center, scale));
      const faces = this.mesh.triangles
        .map((tri) => {
          const [a, b, c] = tri.map((i) => projected[i]);
          const depth = (a[2] + b[2] + c[2]) / 3;
          const shade =
            ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) >= 0 ? 1 : 0.62;
          return { a, b, c, depth, shade };
        })
        .sort((f, g) => f.depth - g.depth);
      for (const face of faces) {
        const tone = Math.round(96 * face.shade) + 70;
        ctx.fillStyle = `rgb(${tone - 20}, ${tone}, ${tone + 30})`;
        ctx.strokeStyle = "rgba(16, 20, 28, 0.55)";
        ctx.beginPath();
        ctx.moveTo(face.a[0], face.a[1]);
        ctx.lineTo(face.b[0], face.b[1]);
        ctx.lineTo(face.c[0], face.c[1]);
        ctx.closePath();
        ctx.fill();
        ctx.stroke();
      }
    }

    ctx.lineWidth = 1.6;
    for (const ring of this.rings) {
      ctx.strokeStyle = "#7dd3fc";
      ctx.beginPath();
      ring.forEach((point, index) => {
        const [sx, sy] = this.project(point, center, scale);
        if (index === 0) ctx.moveTo(sx, sy);
        else ctx.lineTo(sx, sy);
      });
      ctx.closePath();
      ctx.stroke();
    }

    for (const overlay of this.overlays) {
      ctx.strokeStyle = overlay.color;
      ctx.setLineDash([5, 4]);
      ctx.beginPath();
      for (let step = 0; step <= 64; step++) {
        const angle = (2 * Math.PI * step) / 64;
        const [sx, sy] = this.project(
          [overlay.radius * Math.cos(angle), overlay.planeY, overlay.radius * Math.sin(angle)],
          center,
          scale,
        );
        if (step === 0) ctx.moveTo(sx, sy);
        else ctx.lineTo(sx, sy);
      }
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }
}
