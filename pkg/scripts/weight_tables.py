"""Tables for the weight kernels: moments, inflection radii and lattice-point counts.

Usage: ``python scripts/weight_tables.py``
"""

from graphrom.weights import gauss_circle_count, gaussian_moment, inflection_radius, polynomial_moment


def main():
    zs = (0.5, 1.0, 2.0, 4.0, 8.0)
    print("Gaussian moments M_p(z) = int_0^z v^(p+1) exp(-v^2/2) dv")
    print("p  " + "".join(f"{z:>14}" for z in zs))
    for p in range(1, 9):
        print(f"{p:<3}" + "".join(f"{gaussian_moment(p, z):>14.6e}" for z in zs))

    print("\npolynomial moments at epsilon = p/2")
    print("p  " + "".join(f"{z:>14}" for z in zs))
    for p in range(1, 9):
        print(f"{p:<3}" + "".join(f"{polynomial_moment(p, z, p / 2):>14.6e}" for z in zs))

    print("\ninflection radius of v^(p+1) exp(-v^2/2)")
    for p in range(1, 9):
        print(f"p={p}  {inflection_radius(p):.12f}")

    print("\nlattice points in the closed p-ball of integer radius R")
    Rs = (1, 2, 5, 10, 20)
    print("p  " + "".join(f"{R:>10}" for R in Rs))
    for p in (1, 2, 3):
        print(f"{p:<3}" + "".join(f"{gauss_circle_count(R, p):>10}" for R in Rs))


if __name__ == "__main__":
    main()
