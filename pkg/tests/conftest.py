def pytest_addoption(parser):
    parser.addoption("--all", action="store_true", help="run all combinations")


def pytest_generate_tests(metafunc):
    run_all = metafunc.config.getoption("all")
    if "kernel_preset" in metafunc.fixturenames:
        if run_all:
            metafunc.parametrize("kernel_preset", ["hilbert", "riesz1", "riesz2"])
        else:
            metafunc.parametrize("kernel_preset", ["hilbert"])
    if "dimension" in metafunc.fixturenames:
        if run_all:
            metafunc.parametrize("dimension", [1, 2])
        else:
            metafunc.parametrize("dimension", [1])
    if "battery_kind" in metafunc.fixturenames:
        if run_all:
            metafunc.parametrize(
                "battery_kind", ["spike", "bump", "step", "cube", "constant"]
            )
        else:
            metafunc.parametrize("battery_kind", ["spike"])
