/** Session state: which model, which target, and one optional assignment
 * (evidence or do) per node. Serializable to the URL fragment so a reload
 * restores the same queries.
 */

import type { Assignment, QueryRequest, SessionState } from "./types";

export function emptySession(): SessionState {
  return { modelId: null, compareModelId: null, target: null, assignments: {} };
}

/** Invariants: the target never carries an assignment; at most one
 * assignment per node (enforced structurally by the record). */
export function setTarget(s: SessionState, target: string | null): SessionState {
  const assignments = { ...s.assignments };
  if (target !== null) delete assignments[target];
  return { ...s, target, assignments };
}

export function setAssignment(
  s: SessionState,
  node: string,
  assignment: Assignment | null,
): SessionState {
  if (node === s.target) {
    throw new Error("the target node cannot carry an assignment");
  }
  const assignments = { ...s.assignments };
  if (assignment === null) {
    delete assignments[node];
  } else {
    assignments[node] = assignment;
  }
  return { ...s, assignments };
}

export function clearAssignments(s: SessionState): SessionState {
  return { ...s, assignments: {} };
}

/** The exact wire body for /query implied by the current session. */
export function toQueryRequest(s: SessionState): QueryRequest {
  if (s.target === null) throw new Error("no target selected");
  const evidence: Record<string, string> = {};
  const doMap: Record<string, string> = {};
  for (const [node, a] of Object.entries(s.assignments)) {
    if (a.kind === "evidence") evidence[node] = a.state;
    else doMap[node] = a.state;
  }
  return { target: s.target, evidence, do: doMap };
}

// ---------------------------------------------------------------------------
// URL-fragment serialization

interface FragmentShape {
  m: string | null;
  c: string | null;
  t: string | null;
  a: Record<string, { k: "e" | "d"; s: string }>;
}

export function sessionToFragment(s: SessionState): string {
  const shape: FragmentShape = {
    m: s.modelId,
    c: s.compareModelId,
    t: s.target,
    a: Object.fromEntries(
      Object.entries(s.assignments).map(([n, a]) => [
        n,
        { k: a.kind === "evidence" ? "e" : "d", s: a.state },
      ]),
    ),
  };
  return "#s=" + encodeURIComponent(JSON.stringify(shape));
}

export function sessionFromFragment(fragment: string): SessionState | null {
  const match = /^#s=(.*)$/.exec(fragment);
  if (!match) return null;
  let shape: FragmentShape;
  try {
    shape = JSON.parse(decodeURIComponent(match[1])) as FragmentShape;
  } catch {
    return null;
  }
  if (typeof shape !== "object" || shape === null) return null;
  const assignments: Record<string, Assignment> = {};
  for (const [node, a] of Object.entries(shape.a ?? {})) {
    if (node === shape.t) continue; // re-impose the invariant on bad input
    assignments[node] = {
      kind: a.k === "e" ? "evidence" : "do",
      state: a.s,
    };
  }
  return {
    modelId: shape.m ?? null,
    compareModelId: shape.c ?? null,
    target: shape.t ?? null,
    assignments,
  };
}
