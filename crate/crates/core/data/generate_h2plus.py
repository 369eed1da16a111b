"""Exact H2+ Born-Oppenheimer curves by separation in prolate spheroidal
coordinates: Legendre expansion for the angular part, Chebyshev collocation
for the radial part, matched on the separation constant. Writes the table
to stdout.
"""
import numpy as np
from numpy.polynomial import legendre as L
from scipy.optimize import brentq

def cheb(N):
    x = np.cos(np.pi*np.arange(N+1)/N)
    c = np.hstack([2, np.ones(N-1), 2])*(-1)**np.arange(N+1)
    X = np.tile(x,(N+1,1)).T
    dX = X - X.T
    D = np.outer(c,1/c)/(dX+np.eye(N+1))
    D = D - np.diag(D.sum(1))
    return D, x

LMAX = 50
def eta2_matrix(par):
    ls = np.arange(par, 2*LMAX+par, 2)
    # normalized Legendre: eta P_l = a_l P_{l+1} + b_l P_{l-1}
    n = len(ls)
    E = np.zeros((LMAX*2+4, LMAX*2+4))
    m = LMAX*2+3
    for l in range(m):
        if l+1 < m+1:
            E[l, l+1] = E[l+1, l] = (l+1)/np.sqrt((2*l+1)*(2*l+3))
    E2 = (E@E)
    return ls, E2[np.ix_(ls, ls)]

def a_ang(p, par):
    ls, N2 = eta2_matrix(par)
    M = np.diag(ls*(ls+1.0)) - p*p*N2
    w, v = np.linalg.eigh(M)
    return w[0], ls, v[:,0]

NR = 120
D, x = cheb(NR)
def radial(p, R):
    Lx = 40.0/p
    xi = 1 + (x+1)/2*Lx          # x in [-1,1] -> xi in [1, 1+Lx]
    Dm = D*2/Lx
    Op = np.diag(xi**2-1)@Dm@Dm + np.diag(2*xi)@Dm + np.diag(2*R*xi - p*p*xi**2)
    # xi_max is x=1 -> index 0; Dirichlet there
    A = Op[1:,1:]
    w, v = np.linalg.eig(A)
    w = w.real
    # nodeless eigenvector with largest eigenvalue
    order = np.argsort(-w)
    for k in order[:6]:
        vec = np.real(v[:,k])
        if np.all(vec >= -1e-8*np.abs(vec).max()) or np.all(vec <= 1e-8*np.abs(vec).max()):
            X = np.concatenate([[0.0], vec])
            return w[k], xi, X/np.abs(X).max()
    raise RuntimeError("no nodeless")

def solve(R, par, p0):
    f = lambda p: a_ang(p, par)[0] - radial(p, R)[0]
    lo, hi = p0*0.97, p0*1.03
    while f(lo)*f(hi) > 0:
        lo *= 0.9; hi *= 1.1
    p = brentq(f, lo, hi, xtol=1e-14)
    return p

def clenshaw_curtis(N):
    # weights on x_k = cos(pi k/N), for integral over [-1,1]
    theta = np.pi*np.arange(N+1)/N
    w = np.zeros(N+1)
    v = np.ones(N-1)
    if N % 2 == 0:
        w[0] = w[N] = 1/(N*N-1)
        for k in range(1, N//2):
            v -= 2*np.cos(2*k*theta[1:-1])/(4*k*k-1)
        v -= np.cos(N*theta[1:-1])/(N*N-1)
    else:
        w[0] = w[N] = 1/(N*N)
        for k in range(1, (N-1)//2+1):
            v -= 2*np.cos(2*k*theta[1:-1])/(4*k*k-1)
    w[1:-1] = 2*v/N
    return w

CW = clenshaw_curtis(NR)
GX, GW = L.leggauss(80)

def curves(R, pg, pu):
    out = {}
    for name, p, par in [("g", pg, 0), ("u", pu, 1)]:
        A, ls, c = a_ang(p, par)
        Y = sum(ci*np.sqrt((2*l+1)/2)*L.legval(GX, [0]*l+[1]) for ci, l in zip(c, ls))
        _, xi, X = radial(p, R)
        Lx = 40.0/p
        out[name] = (p, Y, xi, X, CW*Lx/2)
    return out

def dipole(R, o):
    pg, Yg, xig, Xg, wg = o["g"]
    pu, Yu, xiu, Xu, wu = o["u"]
    # interpolate u radial onto g grid via barycentric? use high-order interp from scipy
    from scipy.interpolate import BarycentricInterpolator
    Xu_on_g = BarycentricInterpolator(xiu, Xu)(np.clip(xig, xiu.min(), xiu.max()))
    Xu_on_g[xig > xiu.max()] = 0.0
    def norm(X, w, xi, Y):
        return (R/2)**3*2*np.pi/(2*np.pi)*( (w*X*X*xi**2).sum()*(GW*Y*Y).sum() - (w*X*X).sum()*(GW*Y*Y*GX**2).sum())
    Ng = norm(Xg, wg, xig, Yg)
    # u normalization on its own grid
    Nu = norm(Xu, wu, xiu, Yu)
    I = (R/2)**4*((wg*Xg*Xu_on_g*xig**3).sum()*(GW*Yg*Yu*GX).sum() - (wg*Xg*Xu_on_g*xig).sum()*(GW*Yg*Yu*GX**3).sum())
    return abs(I)/np.sqrt(Ng*Nu)

def main():
    Rs = np.concatenate([np.arange(0.4, 6.0, 0.05), np.arange(6.0, 12.0, 0.1),
                         np.arange(12.0, 40.01, 0.5)])
    print("# Exact Born-Oppenheimer curves of H2+ (atomic units), relative to H(1s) + p.")
    print("# Generated by generate_h2plus.py.")
    print("# columns: R  eps_1s_sigma_g  eps_2p_sigma_u  transition_dipole")
    pg_prev = pu_prev = r_prev = None
    for R in Rs:
        gg = R*np.sqrt(0.5) if pg_prev is None else pg_prev*R/r_prev
        gu = R*np.sqrt(0.3) if pu_prev is None else pu_prev*R/r_prev
        pg = solve(R, 0, gg)
        pu = solve(R, 1, gu)
        mu = dipole(R, curves(R, pg, pu))
        e1 = -2*pg**2/R**2 + 1/R + 0.5
        e2 = -2*pu**2/R**2 + 1/R + 0.5
        print(f"{R:.2f} {e1:.12e} {e2:.12e} {mu:.12e}", flush=True)
        pg_prev, pu_prev, r_prev = pg, pu, R


if __name__ == "__main__":
    main()
