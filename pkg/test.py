#!/usr/bin/env python3
"""
Self-check for the gadget scattering toolkit
Runs the hand-derived gallery through every identity check
"""

import importlib
import json
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).parent


def test_python_version():
    """Test Python version"""
    print("Testing Python version...")
    version = sys.version_info

    if version.major < 3 or (version.major == 3 and version.minor < 9):
        print(f"❌ FAIL: Python 3.9+ required. Current: {version.major}.{version.minor}")
        return False
    print(f"✅ PASS: Python {version.major}.{version.minor}.{version.micro}")
    return True


def test_dependencies():
    """Test required dependencies"""
    print("\nTesting dependencies...")

    required_modules = [
        ('numpy', 'NumPy (linear algebra, polynomial roots)'),
        ('scipy', 'SciPy (LU/eigh, adaptive quadrature)'),
        ('tqdm', 'tqdm (fuzz progress)'),
    ]

    results = []
    for module_name, description in required_modules:
        try:
            importlib.import_module(module_name)
            print(f"✅ PASS: {description}")
            results.append(True)
        except ImportError:
            print(f"❌ FAIL: {description} - Not installed")
            results.append(False)
    return all(results)


def test_gallery_files():
    """Every gallery JSON loads and matches its in-code builder"""
    print("\nTesting gallery files...")
    import numpy as np
    from utils.errors import ValidationError
    from utils.gallery import EXPECTED
    from utils.graph_model import load_graph

    files = {'g0': 'g0', 'g1_c3': 'g1_c3', 'g1_c0.5': 'g1_chalf', 'g1_c1': 'g1_c1',
             'g2': 'g2', 'g3': 'g3', 'g4': 'g4'}
    results = []
    for key, stem in files.items():
        graph = load_graph(str(PROJECT_ROOT / 'gallery' / f'{stem}.json'))
        ok = np.allclose(graph.hhat, EXPECTED[key].build().hhat)
        print(f"{'✅ PASS' if ok else '❌ FAIL'}: gallery/{stem}.json")
        results.append(ok)

    try:
        load_graph(str(PROJECT_ROOT / 'gallery' / 'broken.json'))
        print("❌ FAIL: broken.json was accepted")
        results.append(False)
    except ValidationError:
        print("✅ PASS: broken.json rejected")
        results.append(True)
    return all(results)


def test_gallery_identities():
    """Bound-state counts and windings of the hand-derived gadgets"""
    print("\nTesting gallery identities...")
    from utils.gallery import EXPECTED
    from utils.levinson import levinson_check
    from utils.spectra import lemma3_check

    results = []
    for name, expected in sorted(EXPECTED.items()):
        graph = expected.build()
        counts = lemma3_check(graph)
        report = levinson_check(graph)
        ok = (counts.passed and report.passed and report.winding_phase == expected.winding
              and (report.n_b, report.n_c, report.n_h) == (expected.n_b, expected.n_c, expected.n_h))
        print(f"{'✅ PASS' if ok else '❌ FAIL'}: {name}: winding {report.winding_phase}, "
              f"n_b={report.n_b} n_c={report.n_c} n_h={report.n_h}")
        results.append(ok)
    return all(results)


def test_unitarity():
    """S is unitary around the circle for each gallery gadget"""
    print("\nTesting unitarity...")
    from utils.gallery import EXPECTED
    from utils.smatrix import circle_table

    worst = 0.0
    for expected in EXPECTED.values():
        graph = expected.build()
        worst = max(worst, max(s.unitarity_defect() for s in circle_table(graph, 64)))
    ok = worst <= 1e-10
    print(f"{'✅ PASS' if ok else '❌ FAIL'}: worst unitarity defect {worst:.2e}")
    return ok


def test_configuration():
    """Test configuration file"""
    print("\nTesting configuration...")

    config_file = PROJECT_ROOT / 'config.json'
    if not config_file.exists():
        print("⚠️  WARN: config.json not found, will use defaults")
        return True

    try:
        with open(config_file, 'r', encoding='utf-8') as f:
            config = json.load(f)
    except json.JSONDecodeError as e:
        print(f"❌ FAIL: config.json is invalid JSON: {e}")
        return False

    for section in ['tolerances', 'spectra', 'levinson', 'completeness', 'dynamics', 'fuzz']:
        if section in config:
            print(f"✅ PASS: Configuration section '{section}' found")
        else:
            print(f"⚠️  WARN: Configuration section '{section}' missing")
    return True


def run_comprehensive_test():
    """Run all tests"""
    print("🧪 Running scattering toolkit self-check")
    print("=" * 50)

    tests = [
        ("Python Version", test_python_version),
        ("Dependencies", test_dependencies),
        ("Gallery Files", test_gallery_files),
        ("Gallery Identities", test_gallery_identities),
        ("Unitarity", test_unitarity),
        ("Configuration", test_configuration),
    ]

    passed = 0
    for test_name, test_func in tests:
        print(f"\n📋 Test: {test_name}")
        print("-" * 30)
        try:
            if test_func():
                passed += 1
        except Exception as e:
            print(f"❌ FAIL: Test crashed: {e}")

    print("\n" + "=" * 50)
    print(f"📊 Test Results: {passed}/{len(tests)} tests passed")
    if passed == len(tests):
        print("🎉 All checks passed.")
        return True
    print("⚠️  Some checks failed. Check the issues above.")
    return False


def main():
    """Main function"""
    if len(sys.argv) > 1:
        test_name = sys.argv[1].lower()
        test_map = {
            'python': test_python_version,
            'deps': test_dependencies,
            'gallery': test_gallery_files,
            'identities': test_gallery_identities,
            'unitarity': test_unitarity,
            'config': test_configuration,
        }
        if test_name in test_map:
            print(f"Running {test_name} test...")
            sys.exit(0 if test_map[test_name]() else 1)
        print(f"Unknown test: {test_name}")
        print(f"Available tests: {', '.join(test_map.keys())}")
        sys.exit(2)
    sys.exit(0 if run_comprehensive_test() else 1)


if __name__ == "__main__":
    main()
