"""Maxwell residuals across the catalog of stationary and non-stationary potentials."""
from pauli_sep.catalog import CASE_IDS, CatalogCase, catalog_maxwell_check


def main():
    for cid in CASE_IDS:
        report = catalog_maxwell_check(CatalogCase(cid))
        status = "UNVERIFIED" if report.unverified else ("pass" if report.passed else "FAIL")
        print(f"{cid:14s} max residual {report.max_residual:.2e}  ({report.n_points} points)  {status}")


if __name__ == "__main__":
    main()
