#!/usr/bin/env python3
"""
Dependency checker for the scattering toolkit
Checks for required packages and the bundled gadget gallery
"""

import sys
import importlib
import subprocess
from pathlib import Path

class DependencyChecker:
    def __init__(self):
        self.required_packages = [
            ("numpy", "numpy", "Dense linear algebra, FFT, polynomial roots"),
            ("scipy", "scipy", "LU/SVD/eigh and adaptive quadrature"),
            ("tqdm", "tqdm", "Fuzz suite progress bars"),
        ]

        self.test_packages = [
            ("pytest", "pytest", "Test runner"),
            ("hypothesis", "hypothesis", "Property-based tests"),
        ]

    def check_python_version(self):
        """Check Python version"""
        print("🐍 Checking Python version...")
        version = sys.version_info

        if version.major < 3 or (version.major == 3 and version.minor < 9):
            print(f"❌ Python 3.9+ required. Current: {version.major}.{version.minor}")
            return False
        print(f"✅ Python {version.major}.{version.minor}.{version.micro}")
        return True

    def check_package(self, package_name, import_name, description=""):
        """Check if a package is installed"""
        try:
            module = importlib.import_module(import_name)
            version = getattr(module, "__version__", "?")
            print(f"✅ {package_name} {version} - {description}")
            return True
        except ImportError:
            print(f"❌ {package_name} - {description} (Not installed)")
            return False

    def check_group(self, title, packages):
        print(f"\n📦 Checking {title}...")
        missing = [name for name, import_name, description in packages
                   if not self.check_package(name, import_name, description)]
        if missing:
            print(f"\n❌ Missing: {', '.join(missing)}")
            print("Install with: pip install " + " ".join(missing))
        return not missing, missing

    def check_gallery(self):
        """Check that the gallery gadgets load"""
        print("\n📁 Checking gadget gallery...")
        gallery_dir = Path(__file__).parent / "gallery"
        files = sorted(gallery_dir.glob("g*.json"))
        if not files:
            print(f"❌ No gallery gadgets found in {gallery_dir}")
            return False

        try:
            from utils.graph_model import load_graph
            from utils.errors import ScatteringError
        except ImportError as e:
            print(f"❌ Cannot import the library: {e}")
            return False

        ok = True
        for path in files:
            try:
                graph = load_graph(str(path))
                print(f"✅ {path.name}: n={graph.n} m={graph.m}")
            except ScatteringError as e:
                print(f"❌ {path.name}: {e.message}")
                ok = False
        return ok

    def install_missing_packages(self, missing_packages):
        """Install missing packages"""
        if not missing_packages:
            return True

        print(f"\n📥 Installing missing packages: {', '.join(missing_packages)}")
        try:
            subprocess.run([sys.executable, "-m", "pip", "install"] + missing_packages, check=True)
            print("✅ Packages installed successfully!")
            return True
        except subprocess.CalledProcessError as e:
            print(f"❌ Failed to install packages: {e}")
            print(f"pip install {' '.join(missing_packages)}")
            return False

    def run_full_check(self, fix=False, with_tests=True):
        """Run full dependency check"""
        print("🔍 Scattering Toolkit Dependency Check")
        print("=" * 40)

        all_good = self.check_python_version()

        packages_ok, missing = self.check_group("required packages", self.required_packages)
        if not packages_ok and fix:
            packages_ok = self.install_missing_packages(missing)
        all_good = all_good and packages_ok

        if with_tests:
            tests_ok, missing_tests = self.check_group("test packages", self.test_packages)
            if not tests_ok and fix:
                tests_ok = self.install_missing_packages(missing_tests)
            all_good = all_good and tests_ok

        gallery_ok = packages_ok and self.check_gallery()

        print("\n" + "=" * 40)
        if all_good and gallery_ok:
            print("✅ All dependencies satisfied!")
        elif packages_ok and gallery_ok:
            print("✅ Core dependencies satisfied! Install pytest and hypothesis to run the tests.")
        else:
            print("❌ Missing dependencies. Run with --fix or: pip install -r requirements.txt")

        return all_good and gallery_ok


def main():
    """Main function"""
    import argparse

    parser = argparse.ArgumentParser(description="Check toolkit dependencies")
    parser.add_argument("--fix", action="store_true",
                        help="Try to install missing packages automatically")
    parser.add_argument("--no-tests", action="store_true",
                        help="Skip the test tooling check")

    args = parser.parse_args()

    checker = DependencyChecker()
    success = checker.run_full_check(fix=args.fix, with_tests=not args.no_tests)

    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
