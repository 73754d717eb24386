"""Builder front end for small dense conic programs.

Variables are named scalars, real vectors, Hermitian PSD complex matrix
blocks, or free complex matrices. Constraints are linear equalities and
inequalities, second-order cones, affine real-symmetric PSD blocks, and
exponential-cone triples (a, b, c) meaning b*exp(a/b) <= c.

Hermitian blocks are lifted internally to real symmetric blocks
[[Re, -Im], [Im, Re]], which preserves eigenvalue signs.
"""

import numpy as np
import scipy.sparse as sp

from . import solver
from .cones import svec_indices, svec_scale


class ProgramError(Exception):
    pass


class LinExpr:
    """Sparse real affine expression over a program's flat variables."""

    __slots__ = ("prog", "terms", "const")

    def __init__(self, prog, terms=None, const=0.0):
        self.prog = prog
        self.terms = terms if terms is not None else {}
        self.const = float(const)

    def copy(self):
        return LinExpr(self.prog, dict(self.terms), self.const)

    def _merge(self, other, sign):
        if isinstance(other, LinExpr):
            if other.prog is not self.prog:
                raise ProgramError("expressions belong to different programs")
            out = self.copy()
            for k, v in other.terms.items():
                out.terms[k] = out.terms.get(k, 0.0) + sign * v
            out.const += sign * other.const
            return out
        out = self.copy()
        out.const += sign * float(other)
        return out

    def __add__(self, other):
        return self._merge(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._merge(other, -1.0)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return LinExpr(self.prog, {k: -v for k, v in self.terms.items()}, -self.const)

    def __mul__(self, scalar):
        s = float(scalar)
        return LinExpr(self.prog, {k: s * v for k, v in self.terms.items()}, s * self.const)

    __rmul__ = __mul__

    def validate(self):
        vals = list(self.terms.values()) + [self.const]
        if not np.all(np.isfinite(vals)):
            raise ProgramError("non-finite coefficient in expression")
        for k in self.terms:
            if k < 0 or k >= self.prog.nvar:
                raise ProgramError("expression references an undeclared variable")


class _VarBase:
    def __init__(self, prog, name, offset, size):
        self.prog = prog
        self.name = name
        self.offset = offset
        self.size = size

    def _e(self, idx, coef=1.0):
        return LinExpr(self.prog, {self.offset + idx: coef})


class ScalarVar(_VarBase):
    def expr(self):
        return self._e(0)


class VectorVar(_VarBase):
    def __getitem__(self, i):
        if not 0 <= i < self.size:
            raise IndexError(i)
        return self._e(i)

    def sum(self):
        return LinExpr(self.prog, {self.offset + i: 1.0 for i in range(self.size)})


class HermitianVar(_VarBase):
    """Hermitian PSD matrix variable of side n.

    Real parameter layout: n diagonal entries, then (re, im) pairs for the
    strict upper triangle in row-major order.
    """

    def __init__(self, prog, name, offset, n):
        super().__init__(prog, name, offset, n * n)
        self.n = n
        self._off_index = {}
        pos = n
        for i in range(n):
            for j in range(i + 1, n):
                self._off_index[(i, j)] = pos
                pos += 2

    def diag(self, i):
        return self._e(i)

    def re(self, i, j):
        if i == j:
            return self.diag(i)
        if i > j:
            i, j = j, i
        return self._e(self._off_index[(i, j)])

    def im(self, i, j):
        # Im X[i, j] for i < j; the (j, i) entry is its negative
        if i == j:
            return LinExpr(self.prog)
        if i < j:
            return self._e(self._off_index[(i, j)] + 1)
        return self._e(self._off_index[(j, i)] + 1, -1.0)

    def trace_with(self, cmat):
        """Real linear expression tr(C X) for Hermitian coefficient C."""
        cmat = np.asarray(cmat)
        if cmat.shape != (self.n, self.n):
            raise ProgramError("coefficient shape mismatch")
        if np.max(np.abs(cmat - cmat.conj().T)) > 1e-10 * (1 + np.max(np.abs(cmat))):
            raise ProgramError("trace_with expects a Hermitian coefficient")
        terms = {}
        for i in range(self.n):
            v = float(cmat[i, i].real)
            if v != 0.0:
                terms[self.offset + i] = terms.get(self.offset + i, 0.0) + v
        for i in range(self.n):
            for j in range(i + 1, self.n):
                base = self.offset + self._off_index[(i, j)]
                cre, cim = 2.0 * cmat[i, j].real, 2.0 * cmat[i, j].imag
                if cre != 0.0:
                    terms[base] = terms.get(base, 0.0) + cre
                if cim != 0.0:
                    terms[base + 1] = terms.get(base + 1, 0.0) + cim
        return LinExpr(self.prog, terms)

    def value(self, x):
        out = np.zeros((self.n, self.n), dtype=complex)
        for i in range(self.n):
            out[i, i] = x[self.offset + i]
        for (i, j), pos in self._off_index.items():
            re, im = x[self.offset + pos], x[self.offset + pos + 1]
            out[i, j] = re + 1j * im
            out[j, i] = re - 1j * im
        return out


class ComplexMatrixVar(_VarBase):
    """Free complex matrix variable; params are (re, im) pairs row-major."""

    def __init__(self, prog, name, offset, rows, cols):
        super().__init__(prog, name, offset, 2 * rows * cols)
        self.rows = rows
        self.cols = cols

    def _pos(self, i, j):
        return 2 * (i * self.cols + j)

    def re(self, i, j):
        return self._e(self._pos(i, j))

    def im(self, i, j):
        return self._e(self._pos(i, j) + 1)

    def value(self, x):
        out = np.zeros((self.rows, self.cols), dtype=complex)
        for i in range(self.rows):
            for j in range(self.cols):
                p = self.offset + self._pos(i, j)
                out[i, j] = x[p] + 1j * x[p + 1]
        return out


def lift_hermitian(xc):
    """Real symmetric lift [[Re, -Im], [Im, Re]] of a Hermitian matrix."""
    xc = np.asarray(xc)
    re, im = xc.real, xc.imag
    return np.block([[re, -im], [im, re]])


class ConicProgram:
    """A conic program under construction; see module docstring."""

    def __init__(self):
        self.nvar = 0
        self.vars = {}
        self._order = []
        self._eqs = []       # (LinExpr, rhs)
        self._ineqs = []     # expr <= rhs
        self._soc_blocks = []  # list of [t, u1, u2, ...] exprs
        self._psd_blocks = []  # (side, list of upper-tri exprs row-major)
        self._exp_blocks = []  # (a, b, c) exprs
        self._herm_vars = []
        self._registry = []  # (kind, position) per user constraint
        self.sense = "min"
        self.objective = LinExpr(self)

    # ---- variables ----

    def _register_var(self, var):
        if var.name in self.vars:
            raise ProgramError(f"duplicate variable name {var.name!r}")
        self.vars[var.name] = var
        self._order.append(var.name)
        self.nvar += var.size
        return var

    def scalar(self, name):
        return self._register_var(ScalarVar(self, name, self.nvar, 1))

    def vector(self, name, n):
        return self._register_var(VectorVar(self, name, self.nvar, n))

    def hermitian_psd(self, name, n):
        var = self._register_var(HermitianVar(self, name, self.nvar, n))
        self._herm_vars.append(var)
        return var

    def complex_matrix(self, name, rows, cols):
        return self._register_var(ComplexMatrixVar(self, name, self.nvar, rows, cols))

    def constant(self, value=0.0):
        return LinExpr(self, const=value)

    # ---- constraints; each returns a handle for dual lookup ----

    def _handle(self, kind, pos):
        self._registry.append((kind, pos))
        return len(self._registry) - 1

    @staticmethod
    def _as_expr(e):
        if not isinstance(e, LinExpr):
            raise ProgramError("expected a LinExpr")
        e.validate()
        return e

    def eq(self, lhs, rhs=0.0):
        self._eqs.append((self._as_expr(lhs), float(rhs)))
        return self._handle("eq", len(self._eqs) - 1)

    def le(self, lhs, rhs=0.0):
        if isinstance(rhs, LinExpr):
            lhs, rhs = lhs - rhs, 0.0
        self._ineqs.append((self._as_expr(lhs), float(rhs)))
        return self._handle("ineq", len(self._ineqs) - 1)

    def ge(self, lhs, rhs=0.0):
        if isinstance(rhs, LinExpr):
            return self.le(rhs - lhs, 0.0)
        return self.le(-lhs, -float(rhs))

    def soc(self, t, us):
        block = [self._as_expr(t)] + [self._as_expr(u) for u in us]
        self._soc_blocks.append(block)
        return self._handle("soc", len(self._soc_blocks) - 1)

    def quad_le(self, us, bound):
        """sum(u_i^2) <= bound with affine bound, as a second-order cone."""
        bound = bound if isinstance(bound, LinExpr) else self.constant(bound)
        t = (bound + 1.0) * 0.5
        tail = (bound - 1.0) * 0.5
        return self.soc(t, list(us) + [tail])

    def psd(self, mat_exprs):
        """Affine real-symmetric PSD constraint; pass a full square grid."""
        side = len(mat_exprs)
        upper = []
        for i in range(side):
            if len(mat_exprs[i]) != side:
                raise ProgramError("psd block must be square")
            for j in range(i, side):
                upper.append(self._as_expr(mat_exprs[i][j]))
        self._psd_blocks.append((side, upper))
        return self._handle("psd", len(self._psd_blocks) - 1)

    def expc(self, a, b, c):
        """(a, b, c) in the exponential cone: b*exp(a/b) <= c, b > 0."""
        self._exp_blocks.append(
            (self._as_expr(a), self._as_expr(b), self._as_expr(c))
        )
        return self._handle("exp", len(self._exp_blocks) - 1)

    def minimize(self, expr):
        self.sense = "min"
        self.objective = self._as_expr(expr)

    def maximize(self, expr):
        self.sense = "max"
        self.objective = self._as_expr(expr)

    # ---- compilation ----

    def _expr_row(self, rows, cols, vals, ridx, expr, sign=1.0):
        for k, v in expr.terms.items():
            if v != 0.0:
                rows.append(ridx)
                cols.append(k)
                vals.append(sign * v)

    def compile(self):
        n = self.nvar
        # equalities
        arows, acols, avals, bvec = [], [], [], []
        for i, (expr, rhs) in enumerate(self._eqs):
            self._expr_row(arows, acols, avals, i, expr)
            bvec.append(rhs - expr.const)
        a_csr = sp.csr_matrix((avals, (arows, acols)), shape=(len(self._eqs), n))

        grows, gcols, gvals, hvec = [], [], [], []
        ridx = 0
        layout = {"ineq": [], "soc": [], "psd": [], "exp": [], "herm": []}

        for expr, rhs in self._ineqs:
            self._expr_row(grows, gcols, gvals, ridx, expr)
            hvec.append(rhs - expr.const)
            layout["ineq"].append(ridx)
            ridx += 1

        soc_dims = []
        for block in self._soc_blocks:
            layout["soc"].append((ridx, len(block)))
            for expr in block:
                self._expr_row(grows, gcols, gvals, ridx, expr, sign=-1.0)
                hvec.append(expr.const)
                ridx += 1
            soc_dims.append(len(block))

        psd_dims = []
        # Hermitian variable lifts first, then affine PSD blocks
        for var in self._herm_vars:
            side = 2 * var.n
            layout["herm"].append((var.name, ridx, side))
            ridx = self._emit_herm_lift(grows, gcols, gvals, hvec, ridx, var)
            psd_dims.append(side)
        for side, upper in self._psd_blocks:
            layout["psd"].append((ridx, side))
            iu, ju = svec_indices(side)
            sc = svec_scale(side)
            # map row-major upper packing to the svec's lower-triangle order
            idx = {}
            pos = 0
            for i in range(side):
                for j in range(i, side):
                    idx[(i, j)] = pos
                    pos += 1
            for k in range(len(iu)):
                i, j = int(ju[k]), int(iu[k])  # (row >= col) -> upper (i <= j)
                expr = upper[idx[(i, j)]]
                self._expr_row(grows, gcols, gvals, ridx, expr, sign=-sc[k])
                hvec.append(sc[k] * expr.const)
                ridx += 1
            psd_dims.append(side)

        for a, b, c in self._exp_blocks:
            layout["exp"].append(ridx)
            for expr in (a, b, c):
                self._expr_row(grows, gcols, gvals, ridx, expr, sign=-1.0)
                hvec.append(expr.const)
                ridx += 1

        g_csr = sp.csr_matrix((gvals, (grows, gcols)), shape=(ridx, n))
        dims = {
            "l": len(self._ineqs),
            "q": soc_dims,
            "s": psd_dims,
            "e": len(self._exp_blocks),
        }
        self.objective.validate()
        c = np.zeros(n)
        for k, v in self.objective.terms.items():
            c[k] = v
        if self.sense == "max":
            c = -c
        return c, g_csr, np.asarray(hvec), dims, a_csr, np.asarray(bvec), layout

    def _emit_herm_lift(self, grows, gcols, gvals, hvec, ridx, var):
        n = var.n
        side = 2 * n
        iu, ju = svec_indices(side)
        sc = svec_scale(side)

        def entry_terms(i, j):
            # lift entry B[i, j]: Re X on the diagonal blocks, Im X below
            bi, ii = divmod(i, n)
            bj, jj = divmod(j, n)
            if bi == bj:
                if ii == jj:
                    return [(var.offset + ii, 1.0)]
                a, bcol = (ii, jj) if ii < jj else (jj, ii)
                return [(var.offset + var._off_index[(a, bcol)], 1.0)]
            # bi == 1, bj == 0 in the lower triangle: Im X[ii, jj]
            if ii == jj:
                return []
            if ii < jj:
                return [(var.offset + var._off_index[(ii, jj)] + 1, 1.0)]
            return [(var.offset + var._off_index[(jj, ii)] + 1, -1.0)]

        for k in range(len(iu)):
            for col, coef in entry_terms(int(iu[k]), int(ju[k])):
                grows.append(ridx)
                gcols.append(col)
                gvals.append(-sc[k] * coef)
            hvec.append(0.0)
            ridx += 1
        return ridx

    # ---- debugging dump ----

    def dumps(self):
        """S-expression-like text form of the program."""

        def fmt(expr):
            parts = []
            for k, v in sorted(expr.terms.items()):
                parts.append(f"(* {v:.12g} v{k})")
            if expr.const or not parts:
                parts.append(f"{expr.const:.12g}")
            return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"

        lines = ["(program"]
        lines.append(f"  ({self.sense} {fmt(self.objective)})")
        lines.append("  (vars")
        for name in self._order:
            v = self.vars[name]
            lines.append(f"    ({type(v).__name__} {name} {v.size})")
        lines.append("  )")
        lines.append("  (constraints")
        for expr, rhs in self._eqs:
            lines.append(f"    (= {fmt(expr)} {rhs:.12g})")
        for expr, rhs in self._ineqs:
            lines.append(f"    (<= {fmt(expr)} {rhs:.12g})")
        for block in self._soc_blocks:
            lines.append("    (soc " + " ".join(fmt(e) for e in block) + ")")
        for side, upper in self._psd_blocks:
            lines.append(f"    (psd {side} " + " ".join(fmt(e) for e in upper) + ")")
        for a, b, c in self._exp_blocks:
            lines.append(f"    (exp {fmt(a)} {fmt(b)} {fmt(c)})")
        lines.append("  ))")
        return "\n".join(lines)


class ConicSolution:
    """Solved program: status, variable values, duals, and residuals."""

    def __init__(self, prog, raw, layout):
        self.status = raw.status
        self.raw = raw
        self.residuals = raw.residuals
        self.iterations = raw.iterations
        self.gap_history = raw.gap_history
        self._prog = prog
        self._layout = layout
        if raw.status == solver.STATUS_OPTIMAL:
            sign = 1.0 if prog.sense == "min" else -1.0
            self.objective = sign * raw.pobj + prog.objective.const
            self.dual_objective = sign * raw.dobj + prog.objective.const
        else:
            self.objective = np.nan
            self.dual_objective = np.nan

    def value(self, var):
        x = self.raw.x
        if isinstance(var, (HermitianVar, ComplexMatrixVar)):
            return var.value(x)
        if isinstance(var, ScalarVar):
            return float(x[var.offset])
        if isinstance(var, VectorVar):
            return x[var.offset : var.offset + var.size].copy()
        raise ProgramError(f"unknown variable {var!r}")

    def dual(self, handle):
        kind, pos = self._prog._registry[handle]
        z = self.raw.z
        if kind == "eq":
            return float(self.raw.y[pos])
        if kind == "ineq":
            return float(z[self._layout["ineq"][pos]])
        if kind == "soc":
            start, dim = self._layout["soc"][pos]
            return z[start : start + dim].copy()
        if kind == "psd":
            start, side = self._layout["psd"][pos]
            sv = side * (side + 1) // 2
            return z[start : start + sv].copy()
        if kind == "exp":
            start = self._layout["exp"][pos]
            return z[start : start + 3].copy()
        raise ProgramError(f"unknown constraint kind {kind}")

    def slack(self, handle):
        kind, pos = self._prog._registry[handle]
        s = self.raw.s
        if kind == "ineq":
            return float(s[self._layout["ineq"][pos]])
        raise ProgramError("slack only available for linear inequalities")


def solve(prog, tol=1e-8, max_iter=100):
    """Compile and solve a ConicProgram; returns a ConicSolution."""
    c, g, h, dims, a, b, layout = prog.compile()
    raw = solver.solve_raw(c, g, h, dims, a, b, tol=tol, max_iter=max_iter)
    return ConicSolution(prog, raw, layout)
