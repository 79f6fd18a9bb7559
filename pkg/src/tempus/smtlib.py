"""Driving an external SMT solver process and maximizing goal counts.

The default backend is a small Node worker around the WASM z3 build, spoken
to over stdin/stdout in plain SMT-LIB2 with echo sentinels for framing. Set
TEMPUS_SOLVER to any command reading the same protocol to swap it out.
"""
from __future__ import annotations

import atexit
import itertools
import os
import queue
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .encoding import Encoding, smt_script
from .model import parse_sexpr


class SolverError(RuntimeError):
    pass


class SolverCrash(SolverError):
    """The solver process died or stopped responding; retryable."""


_WORKER = Path(__file__).parent / "solverjs" / "worker.js"
_npm_root_cache = None


def _npm_root() -> str:
    global _npm_root_cache
    if _npm_root_cache is None:
        try:
            _npm_root_cache = subprocess.run(
                ["npm", "root", "-g"], capture_output=True, text=True, timeout=30
            ).stdout.strip()
        except Exception:
            _npm_root_cache = "/usr/lib/node_modules"
        if not _npm_root_cache:
            _npm_root_cache = "/usr/lib/node_modules"
    return _npm_root_cache


def default_command():
    override = os.environ.get("TEMPUS_SOLVER")
    if override:
        return shlex.split(override)
    return ["node", str(_WORKER)]


class SolverProcess:
    """One long-lived solver subprocess with sentinel-framed requests."""

    def __init__(self, command=None):
        cmd = command or default_command()
        env = dict(os.environ)
        env.setdefault("NODE_PATH", _npm_root())
        self._errfile = tempfile.TemporaryFile(mode="w+")
        try:
            self.proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=self._errfile,
                text=True,
                env=env,
            )
        except OSError as exc:
            raise SolverError("cannot start solver %r: %s" % (cmd, exc))
        self._tags = itertools.count()
        self._lines = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        try:
            for line in self.proc.stdout:
                self._lines.put(line)
        except Exception:
            pass
        self._lines.put(None)

    def alive(self) -> bool:
        return self.proc.poll() is None

    def _cpu_seconds(self) -> Optional[float]:
        try:
            with open("/proc/%d/stat" % self.proc.pid) as fh:
                parts = fh.read().split()
            tick = os.sysconf("SC_CLK_TCK")
            return (int(parts[13]) + int(parts[14])) / tick
        except Exception:
            return None

    def _die(self, why: str):
        try:
            self._errfile.seek(0)
            tail = self._errfile.read()[-2000:]
        except Exception:
            tail = ""
        self.kill()
        raise SolverCrash("%s\n%s" % (why, tail.strip()))

    def request(self, commands) -> str:
        tag = "@done%d" % next(self._tags)
        payload = "\n".join(commands) + '\n(echo "%s")\n' % tag
        try:
            self.proc.stdin.write(payload)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._die("solver process closed its pipe")
        lines = []
        idle_spans = 0
        last_cpu = self._cpu_seconds()
        while True:
            try:
                line = self._lines.get(timeout=2.0)
            except queue.Empty:
                # No output: distinguish a busy solver from a wedged one by
                # whether the process is accumulating CPU time.
                cpu = self._cpu_seconds()
                if not self.alive():
                    self._die("solver process terminated unexpectedly")
                # background GC ticks are well under 10% of a core; real
                # solving pins one
                if cpu is None or last_cpu is None or cpu - last_cpu > 0.2:
                    idle_spans = 0
                else:
                    idle_spans += 1
                    if idle_spans >= 3:
                        self._die("solver silent and idle for 6s")
                last_cpu = cpu
                continue
            if line is None:
                self._die("solver process terminated unexpectedly")
            if line.strip() == tag:
                break
            lines.append(line)
        return "".join(lines)

    def close(self):
        if self.proc.poll() is None:
            try:
                self.proc.stdin.write("(exit)\n")
                self.proc.stdin.flush()
            except Exception:
                pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.kill()
        self._errfile.close()

    def kill(self):
        try:
            self.proc.kill()
            self.proc.wait(timeout=5)
        except Exception:
            pass


_shared: Optional[SolverProcess] = None


def shared_process() -> SolverProcess:
    global _shared
    if _shared is None or not _shared.alive():
        _shared = SolverProcess()
    return _shared


@atexit.register
def _shutdown():
    global _shared
    if _shared is not None:
        _shared.close()
        _shared = None


def parse_value(node):
    if isinstance(node, list):
        if not node:
            raise SolverError("empty value")
        op = node[0]
        if op == "-" and len(node) == 2:
            return -parse_value(node[1])
        if op == "/" and len(node) == 3:
            return parse_value(node[1]) / parse_value(node[2])
        if op == "to_real" and len(node) == 2:
            return parse_value(node[1])
        raise SolverError("unexpected model value %r" % (node,))
    if node == "true":
        return True
    if node == "false":
        return False
    try:
        return Fraction(node)
    except ValueError:
        raise SolverError("unexpected model value %r" % (node,))


def _verdict_of(out: str) -> str:
    if "(error" in out:
        raise SolverError(out.strip())
    verdicts = [ln.strip() for ln in out.splitlines() if ln.strip()]
    for v in reversed(verdicts):
        if v in ("sat", "unsat", "unknown"):
            return v
    raise SolverError("no check-sat verdict in %r" % out)


def _check(proc: SolverProcess) -> str:
    return _verdict_of(proc.request(["(check-sat)"]))


def _get_values(proc: SolverProcess, names) -> dict:
    names = list(names)
    if not names:
        return {}
    out = proc.request(["(get-value (%s))" % " ".join(names)])
    if "(error" in out:
        raise SolverError(out.strip())
    tree = parse_sexpr(out)
    values = {}
    for pair in tree:
        if not isinstance(pair, list) or len(pair) != 2:
            raise SolverError("bad model pair %r" % (pair,))
        sym = pair[0] if isinstance(pair[0], str) else None
        if sym is None:
            raise SolverError("bad model symbol %r" % (pair[0],))
        values[sym] = parse_value(pair[1])
    return values


@dataclass
class MaxSolveResult:
    status: str  # "sat" or "unsat"
    achieved: int
    model: Optional[dict]
    goals: dict  # goal name -> bool


def _model_symbols(enc: Encoding):
    names = [enc.ms_name]
    for occ in enc.occurrences:
        names.append(occ.hvar)
        names.append(occ.tvar)
        if occ.tevar:
            names.append(occ.tevar)
        if occ.dvar:
            names.append(occ.dvar)
    return names


def max_solve(
    enc: Encoding,
    process: Optional[SolverProcess] = None,
    timeout_ms: Optional[int] = None,
) -> MaxSolveResult:
    """Check the hard constraints and binary search the largest number of
    goal formulas that can hold at once; the model achieving the maximum is
    returned with exact rational values.

    A crashed or unresponsive backend is restarted and the whole query is
    replayed, twice at most; everything sent is idempotent from (reset) on.
    """
    attempts = 0
    while True:
        proc = process or shared_process()
        try:
            return _max_solve_once(enc, proc, timeout_ms)
        except SolverCrash:
            attempts += 1
            if process is not None or attempts > 2:
                raise
            _discard_shared(proc)


def _discard_shared(proc: SolverProcess):
    global _shared
    proc.kill()
    if _shared is proc:
        _shared = None


def _max_solve_once(
    enc: Encoding,
    proc: SolverProcess,
    timeout_ms: Optional[int],
) -> MaxSolveResult:
    setup = ["(reset)"]
    if timeout_ms is not None:
        setup.append("(set-option :timeout %d)" % timeout_ms)
    setup.extend(smt_script(enc))
    indicator = {}
    for idx, (name, formula) in enumerate(enc.goals):
        gb = "gb%d" % idx
        indicator[gb] = name
        setup.append("(declare-fun %s () Bool)" % gb)
        setup.append("(assert (= %s %s))" % (gb, formula))
    setup.append("(check-sat)")
    verdict = _verdict_of(proc.request(setup))
    if verdict == "unsat":
        return MaxSolveResult("unsat", 0, None, {})
    if verdict == "unknown":
        raise SolverError("solver returned unknown")

    symbols = _model_symbols(enc) + sorted(indicator)

    def snapshot():
        values = _get_values(proc, symbols)
        count = sum(1 for gb in indicator if values.get(gb) is True)
        return count, values

    lo, best = snapshot()
    hi = len(enc.goals)
    if indicator:
        terms = ["(ite %s 1 0)" % gb for gb in sorted(indicator)]
        summed = terms[0] if len(terms) == 1 else "(+ %s)" % " ".join(terms)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            proc.request(["(push 1)", "(assert (>= %s %d))" % (summed, mid)])
            verdict = _check(proc)
            if verdict == "sat":
                count, values = snapshot()
                proc.request(["(pop 1)"])
                lo, best = count, values
            elif verdict == "unsat":
                proc.request(["(pop 1)"])
                hi = mid - 1
            else:
                proc.request(["(pop 1)"])
                raise SolverError("solver returned unknown during maximization")

    goals = {}
    for gb, goal_name in indicator.items():
        goals[goal_name] = best.get(gb) is True
    return MaxSolveResult("sat", lo, best, goals)
