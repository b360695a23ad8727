import init, { field, scenario_names, inspect_ball, localization_walk, run_scenario } from "./pkg/soccer_coord_web.js";

const PX = 60;
const MARGIN = 0.7;
const canvas = document.getElementById("field");
const ctx = canvas.getContext("2d");
const info = document.getElementById("info");
let F;
let playback = null;

const sx = (x) => (x + F.length / 2 + MARGIN) * PX;
const sy = (y) => (F.width / 2 + MARGIN - y) * PX;
const fx = (px) => px / PX - F.length / 2 - MARGIN;
const fy = (py) => F.width / 2 + MARGIN - py / PX;

function drawField() {
  ctx.fillStyle = "#2e7d32";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "white";
  ctx.lineWidth = 2;
  const hl = F.length / 2, hw = F.width / 2;
  ctx.strokeRect(sx(-hl), sy(hw), F.length * PX, F.width * PX);
  ctx.beginPath(); ctx.moveTo(sx(0), sy(hw)); ctx.lineTo(sx(0), sy(-hw)); ctx.stroke();
  ctx.beginPath(); ctx.arc(sx(0), sy(0), F.center_circle_radius * PX, 0, 2 * Math.PI); ctx.stroke();
  for (const s of [-1, 1]) {
    const front = s * (hl - F.goal_area_depth);
    ctx.strokeRect(sx(Math.min(front, s * hl)), sy(F.goal_area_width / 2), F.goal_area_depth * PX, F.goal_area_width * PX);
  }
  ctx.setLineDash([6, 6]);
  ctx.strokeStyle = "#ffeb3b";
  ctx.beginPath(); ctx.moveTo(sx(F.presence_line_x), sy(hw)); ctx.lineTo(sx(F.presence_line_x), sy(-hw)); ctx.stroke();
  ctx.beginPath(); ctx.moveTo(sx(F.region2_limit_x), sy(hw)); ctx.lineTo(sx(F.region2_limit_x), sy(-hw)); ctx.stroke();
  ctx.setLineDash([]);
}

function robot(pose, colour, label, alpha = 1) {
  ctx.globalAlpha = alpha;
  ctx.fillStyle = colour;
  ctx.beginPath(); ctx.arc(sx(pose.x), sy(pose.y), 10, 0, 2 * Math.PI); ctx.fill();
  ctx.strokeStyle = "white";
  ctx.beginPath();
  ctx.moveTo(sx(pose.x), sy(pose.y));
  ctx.lineTo(sx(pose.x + 0.3 * Math.cos(pose.theta)), sy(pose.y + 0.3 * Math.sin(pose.theta)));
  ctx.stroke();
  if (label) {
    ctx.fillStyle = "white";
    ctx.font = "12px sans-serif";
    ctx.fillText(label, sx(pose.x) + 12, sy(pose.y) - 8);
  }
  ctx.globalAlpha = 1;
}

function ball(p) {
  ctx.fillStyle = "orange";
  ctx.beginPath(); ctx.arc(sx(p.x), sy(p.y), 6, 0, 2 * Math.PI); ctx.fill();
}

function stopPlayback() {
  if (playback) cancelAnimationFrame(playback);
  playback = null;
}

let lastBall = { x: -4.0, y: 0.5 };
function inspect() {
  stopPlayback();
  const dx = parseFloat(document.getElementById("defender-x").value);
  document.getElementById("defender-x-val").textContent = dx.toFixed(1);
  const v = JSON.parse(inspect_ball(lastBall.x, lastBall.y, dx));
  drawField();
  robot(v.goalie, "#1565c0", "keeper");
  v.waiter_starts.forEach((p, i) => robot(p, "#1565c0", `player ${i + 1}`, v.waiters.length ? 0.35 : 1));
  v.waiters.forEach((p, i) => robot(p, "#42a5f5", `wait ${i + 1}`));
  if (v.defender) robot(v.defender, "#90caf9", "defender target", 0.8);
  ball(lastBall);
  info.textContent = `ball (${lastBall.x.toFixed(2)}, ${lastBall.y.toFixed(2)})  ${v.region}\n` +
    `keeper decision: ${v.decision} (presence line clear: ${v.presence_clear})`;
}

canvas.addEventListener("click", (e) => {
  const r = canvas.getBoundingClientRect();
  lastBall = { x: fx(e.clientX - r.left), y: fy(e.clientY - r.top) };
  inspect();
});
document.getElementById("defender-x").addEventListener("input", inspect);

document.getElementById("loc-run").addEventListener("click", () => {
  stopPlayback();
  const seed = BigInt(document.getElementById("loc-seed").value || 0);
  const sigma = parseFloat(document.getElementById("loc-sigma").value);
  const steps = JSON.parse(localization_walk(seed, sigma));
  if (steps.error) { info.textContent = steps.error; return; }
  let k = 0;
  const frame = () => {
    drawField();
    const s = steps[k];
    ctx.strokeStyle = "#ffffff80";
    ctx.beginPath();
    steps.slice(0, k + 1).forEach((p, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, sx(p.truth.x), sy(p.truth.y)));
    ctx.stroke();
    for (const [pose, w] of s.hypotheses) robot(pose, "#fdd835", w.toFixed(2), 0.3 + 0.7 * w);
    robot(s.truth, "#1565c0", "truth");
    const sorted = steps.slice(0, k + 1).map((p) => p.error).sort((a, b) => a - b);
    info.textContent = `t = ${((k + 1) * 0.12).toFixed(2)} s  hypotheses ${s.hypotheses.length}\n` +
      `error ${s.error.toFixed(3)} m, median so far ${sorted[Math.floor(sorted.length / 2)].toFixed(3)} m`;
    k += 1;
    if (k < steps.length) playback = requestAnimationFrame(frame);
  };
  frame();
});

document.getElementById("sc-run").addEventListener("click", () => {
  stopPlayback();
  const name = document.getElementById("sc-name").value;
  const seed = BigInt(document.getElementById("sc-seed").value || 0);
  const teamplay = document.getElementById("sc-teamplay").checked;
  const m = JSON.parse(run_scenario(name, seed, teamplay));
  if (m.error) { info.textContent = m.error; return; }
  let k = 0;
  const frame = () => {
    const f = m.frames[k];
    drawField();
    for (const [id, home, pose, task, active] of f.robots) {
      robot(pose, home ? "#1565c0" : "#c62828", `${id}${task ? " " + task : ""}`, active ? 1 : 0.35);
    }
    ball(f.ball);
    const recent = m.events.filter(([t]) => t <= f.t).slice(-6).map(([t, e]) => `${t.toFixed(2)}  ${e}`);
    info.textContent = `t = ${f.t.toFixed(2)} s  score ${f.score[0]}:${f.score[1]}  ` +
      `illegal defense ${m.metrics.illegal_defense}  invariant violations ${m.violations}\n` + recent.join("\n");
    k += 2;
    if (k < m.frames.length) playback = requestAnimationFrame(frame);
  };
  frame();
});

await init();
F = JSON.parse(field());
for (const n of JSON.parse(scenario_names())) {
  const o = document.createElement("option");
  o.value = o.textContent = n;
  document.getElementById("sc-name").appendChild(o);
}
inspect();
