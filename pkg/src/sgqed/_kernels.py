"""Compiled inner loop of the stochastic wavefunction integrator.

The conditioned state of a batch of trajectories is held as separate real and
imaginary planes ``(B, Fp)`` where the flat index is ``2*m + s`` (field level
m, atomic index s) padded by PAD zeros on both sides so the banded drift needs
no bounds checks.  The deterministic generator couples only the flat offsets
{-3, -1, 0, +1, +3}; the measurement back-action couples offset +2 through the
annihilator.  All arithmetic is per-trajectory (row) elementwise, so records
are bit-identical however a seed list is split into batches.

Noise enters as pre-drawn step-major slabs (one row per step) so that a
trajectory's random stream depends only on its seed, the step count and the
detection mode, never on snapshot boundaries or batch composition.
"""

from __future__ import annotations

import numba
import numpy as np

PAD = 3

#: record-row layout
R_X, R_Y, R_Z, R_AR, R_AI, R_DQR, R_DQI, R_IR, R_II, R_CLICK, R_TOP, R_NORMDEV = range(12)
N_REC_FIELDS = 12

MODE_NONE = 0
MODE_HOMODYNE = 1
MODE_HETERODYNE = 2

TOP_POPULATION_TOL = 1e-6


@numba.njit(cache=True, fastmath=True)
def run_segment(psiR, psiI, filtR, filtI, lognorm, clickflag,
                cidx, cR, cI, sqa,
                dW1, dW2, uni,
                kg0, n_steps_seg,
                dt, mode, ckr, cki, s8k, s2k, gam, bw,
                stride, rec, click_t, click_n, err_state):
    """Advance every trajectory in the batch by ``n_steps_seg`` Euler steps.

    Per step and per trajectory: (1) write the decimated record row when the
    global step index is a multiple of ``stride``, (2) atomic jump test,
    (3) diffusive step with the measurement record, (4) renormalize, then the
    photocurrent filter consumes the step's charge increment.  Returns early
    with err_state set when the top Fock level population exceeds tolerance.
    """
    B = psiR.shape[0]
    Fp = psiR.shape[1]
    F = Fp - 2 * PAD
    n_lev = F // 2
    newR = np.empty(Fp)
    newI = np.empty(Fp)
    for k in range(n_steps_seg):
        kg = kg0 + k
        recording = (kg % stride) == 0
        ri = kg // stride
        for b in range(B):
            c = cidx[b]
            if recording:
                smR = 0.0
                smI = 0.0
                z = 0.0
                for m in range(n_lev):
                    f = PAD + 2 * m
                    # <sigma_-> = sum_m conj(psi[m,-]) psi[m,+]
                    smR += psiR[b, f + 1] * psiR[b, f] + psiI[b, f + 1] * psiI[b, f]
                    smI += psiR[b, f + 1] * psiI[b, f] - psiI[b, f + 1] * psiR[b, f]
                    z += (psiR[b, f] ** 2 + psiI[b, f] ** 2
                          - psiR[b, f + 1] ** 2 - psiI[b, f + 1] ** 2)
                avR = 0.0
                avI = 0.0
                nrm0 = 0.0
                for f in range(PAD, PAD + F):
                    s = sqa[f]
                    avR += s * (psiR[b, f] * psiR[b, f + 2] + psiI[b, f] * psiI[b, f + 2])
                    avI += s * (psiR[b, f] * psiI[b, f + 2] - psiI[b, f] * psiR[b, f + 2])
                    nrm0 += psiR[b, f] ** 2 + psiI[b, f] ** 2
                top = (psiR[b, PAD + F - 2] ** 2 + psiI[b, PAD + F - 2] ** 2
                       + psiR[b, PAD + F - 1] ** 2 + psiI[b, PAD + F - 1] ** 2)
                rec[R_X, b, ri] = 2.0 * smR
                rec[R_Y, b, ri] = -2.0 * smI
                rec[R_Z, b, ri] = z
                rec[R_AR, b, ri] = avR
                rec[R_AI, b, ri] = avI
                rec[R_IR, b, ri] = filtR[b]
                rec[R_II, b, ri] = filtI[b]
                rec[R_CLICK, b, ri] = clickflag[b]
                rec[R_TOP, b, ri] = top
                rec[R_NORMDEV, b, ri] = abs(np.sqrt(nrm0) - 1.0)
                clickflag[b] = 0.0
                if top > TOP_POPULATION_TOL:
                    err_state[0] = 1.0
                    err_state[1] = kg
                    err_state[2] = b
                    return
            # (2) atomic jump test on the recorded (pre-step) state
            if gam > 0.0:
                pe = 0.0
                for m in range(n_lev):
                    f = PAD + 2 * m
                    pe += psiR[b, f] ** 2 + psiI[b, f] ** 2
                if uni[k, b] < gam * pe * dt:
                    inv = 1.0 / np.sqrt(pe)
                    for m in range(n_lev):
                        f = PAD + 2 * m
                        psiR[b, f + 1] = psiR[b, f] * inv
                        psiI[b, f + 1] = psiI[b, f] * inv
                        psiR[b, f] = 0.0
                        psiI[b, f] = 0.0
                    n = click_n[b]
                    if n < click_t.shape[1]:
                        click_t[b, n] = kg * dt
                        click_n[b] = n + 1
                    else:
                        err_state[0] = 2.0
                        err_state[1] = kg
                        err_state[2] = b
                        return
                    clickflag[b] = 1.0
            # (3) measurement record of this step
            dqR = 0.0
            dqI = 0.0
            chR = 0.0
            chI = 0.0
            if mode != MODE_NONE:
                avR = 0.0
                avI = 0.0
                for f in range(PAD, PAD + F):
                    s = sqa[f]
                    avR += s * (psiR[b, f] * psiR[b, f + 2] + psiI[b, f] * psiI[b, f + 2])
                    avI += s * (psiR[b, f] * psiI[b, f + 2] - psiI[b, f] * psiR[b, f + 2])
                if mode == MODE_HOMODYNE:
                    # dq = sqrt(8 kappa) Re(e^{-i theta} <a>) dt + dW
                    dqR = s8k * (ckr * avR - cki * avI) * dt + dW1[k, b]
                    chR = s2k * ckr * dqR
                    chI = s2k * cki * dqR
                else:
                    # dq = sqrt(2 kappa) <a^dag> dt + dZ
                    dqR = s2k * avR * dt + dW1[k, b]
                    dqI = -s2k * avI * dt + dW2[k, b]
                    chR = s2k * dqR
                    chI = s2k * dqI
            # drift bands at offsets -3, -1, 0 ...
            for f in range(PAD, PAD + F):
                aR = (cR[c, 0, f] * psiR[b, f - 3] - cI[c, 0, f] * psiI[b, f - 3]
                      + cR[c, 1, f] * psiR[b, f - 1] - cI[c, 1, f] * psiI[b, f - 1]
                      + cR[c, 2, f] * psiR[b, f] - cI[c, 2, f] * psiI[b, f])
                aI = (cR[c, 0, f] * psiI[b, f - 3] + cI[c, 0, f] * psiR[b, f - 3]
                      + cR[c, 1, f] * psiI[b, f - 1] + cI[c, 1, f] * psiR[b, f - 1]
                      + cR[c, 2, f] * psiI[b, f] + cI[c, 2, f] * psiR[b, f])
                newR[f] = aR
                newI[f] = aI
            # ... and +1, +3, plus the record coupling at offset +2
            nrm = 0.0
            for f in range(PAD, PAD + F):
                aR = (newR[f]
                      + cR[c, 3, f] * psiR[b, f + 1] - cI[c, 3, f] * psiI[b, f + 1]
                      + cR[c, 4, f] * psiR[b, f + 3] - cI[c, 4, f] * psiI[b, f + 3])
                aI = (newI[f]
                      + cR[c, 3, f] * psiI[b, f + 1] + cI[c, 3, f] * psiR[b, f + 1]
                      + cR[c, 4, f] * psiI[b, f + 3] + cI[c, 4, f] * psiR[b, f + 3])
                s = sqa[f]
                nR = psiR[b, f] + dt * aR + s * (chR * psiR[b, f + 2] - chI * psiI[b, f + 2])
                nI = psiI[b, f] + dt * aI + s * (chR * psiI[b, f + 2] + chI * psiR[b, f + 2])
                newR[f] = nR
                newI[f] = nI
                nrm += nR * nR + nI * nI
            # (4) renormalize, keep the discarded log-norm
            inv = 1.0 / np.sqrt(nrm)
            for f in range(PAD, PAD + F):
                psiR[b, f] = newR[f] * inv
                psiI[b, f] = newI[f] * inv
            lognorm[b] += 0.5 * np.log(nrm)
            if recording:
                rec[R_DQR, b, ri] = dqR
                rec[R_DQI, b, ri] = dqI
            # photocurrent filter consumes this step's increment
            filtR[b] += bw * (dqR - filtR[b] * dt)
            filtI[b] += bw * (dqI - filtI[b] * dt)
