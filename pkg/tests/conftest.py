import pytest

from profet.synth import gen_corpus


@pytest.fixture(scope="session")
def clean_corpus():
    """Noise-free synthetic corpus: 10 families on the default 4-device fleet."""
    return gen_corpus(n_families=10, noise_sigma=0.0, seed=42)


@pytest.fixture(scope="session")
def noisy_corpus():
    return gen_corpus(n_families=6, noise_sigma=0.05, seed=7)


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory, clean_corpus):
    """Bundle with the two g3s/p2 pairs, trained with the fast test config."""
    from profet.bundle import save_bundle
    from profet.experiment import train_registry

    from .helpers import FAST_CONFIG

    registry = train_registry(clean_corpus, FAST_CONFIG, seed=42,
                              pairs=[("g3s", "p2"), ("p2", "g3s")])
    path = tmp_path_factory.mktemp("bundle") / "small.profet.json"
    digest = save_bundle(registry, path)
    return path, registry, digest


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[2][:-1])):
            terminalreporter.write_line(line)
