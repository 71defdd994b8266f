#!/usr/bin/env python3
"""
Generate the linear hydrogen-chain FCIDUMP asset.

Runs RHF for an evenly spaced H_n chain, dumps the integrals over canonical RHF
orbitals and writes a JSON sidecar with the reference energies the test suite
checks against (RHF energy and the lowest full-CI singlet energies).

Needs the optional `chem` extra (pyscf).

Usage:
    nrep-make-fcidump
    nrep-make-fcidump --atoms 4 --bond 0.75 --output h4.fcidump
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Dict

from loguru import logger

from ..models import H4_FCIDUMP

# ── Defaults ──────────────────────────────────────────────────────────────
DEFAULT_ATOMS = 4
DEFAULT_BOND = 0.75  # Angstrom
DEFAULT_BASIS = "sto-3g"
FCI_ROOTS = 2
ORBITAL_CONVENTION = ("canonical RHF orbitals in ascending orbital-energy order; "
                      "spin-orbital 2p is orbital p spin alpha, 2p+1 is spin beta")


def sidecar_path(fcidump_path: Path) -> Path:
    return fcidump_path.with_suffix(".json")


def generate_chain_fcidump(output: Path, atoms: int = DEFAULT_ATOMS, bond: float = DEFAULT_BOND,
                           basis: str = DEFAULT_BASIS) -> Dict[str, object]:
    """Write the FCIDUMP and its sidecar; returns the sidecar content.

    Args:
        output: FCIDUMP path; the sidecar goes next to it with a .json suffix
        atoms: number of hydrogen atoms on the line
        bond: spacing between neighbouring atoms in Angstrom
        basis: Gaussian basis-set name understood by pyscf

    Returns:
        Dict with the geometry, RHF energy and lowest FCI singlet energies.
    """
    from pyscf import fci, gto, scf
    from pyscf.tools import fcidump

    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    geometry = [("H", (0.0, 0.0, i * bond)) for i in range(atoms)]
    mol = gto.M(atom=geometry, basis=basis, unit="Angstrom", spin=0, verbose=0)
    mf = scf.RHF(mol)
    hf_energy = float(mf.kernel())
    if not mf.converged:
        raise RuntimeError("RHF did not converge")
    logger.info(f"✓ RHF energy {hf_energy:.10f} Eh")

    fcidump.from_scf(mf, str(output), tol=1e-15)
    solver = fci.addons.fix_spin_(fci.FCI(mf), ss=0)
    solver.nroots = FCI_ROOTS
    energies, _ = solver.kernel()
    fci_energies = [float(e) for e in energies]
    logger.info(f"✓ FCI singlet energies {', '.join(f'{e:.10f}' for e in fci_energies)} Eh")

    sidecar = {
        "molecule": f"linear H{atoms}",
        "bond_length_angstrom": bond,
        "basis": basis,
        "num_orbitals": int(mol.nao_nr()),
        "num_electrons": int(mol.nelectron),
        "hf_energy": hf_energy,
        "fci_singlet_energies": fci_energies,
        "orbital_convention": ORBITAL_CONVENTION,
    }
    sidecar_path(output).write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    logger.info(f"📁 Wrote {output} and {sidecar_path(output).name}")
    return sidecar


def main() -> int:
    logger.remove()
    logger.add(sys.stdout, colorize=True, format="<lvl>{message}</lvl>")

    parser = argparse.ArgumentParser(
        description="Generate a hydrogen-chain FCIDUMP asset with reference energies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--atoms", type=int, default=DEFAULT_ATOMS, help="Number of H atoms (default: 4)")
    parser.add_argument("--bond", type=float, default=DEFAULT_BOND, help="Spacing in Angstrom (default: 0.75)")
    parser.add_argument("--basis", default=DEFAULT_BASIS, help="Basis set (default: sto-3g)")
    parser.add_argument("--output", type=Path, default=H4_FCIDUMP, help=f"Output path (default: {H4_FCIDUMP})")
    args = parser.parse_args()

    try:
        generate_chain_fcidump(args.output, args.atoms, args.bond, args.basis)
    except ImportError:
        logger.error("❌ pyscf is not installed; install the 'chem' extra: pip install 'nrep-adapt[chem]'")
        return 1
    except Exception as e:
        logger.error(f"❌ Error: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
