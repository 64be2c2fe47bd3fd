def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One [PASS]/[FAIL] line per numbered acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            parts = name.split("_")
            num = int(parts[2])
            label = " ".join(parts[3:])
            rows.append((num, "PASS" if outcome == "passed" else "FAIL",
                         label))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, tag, label in sorted(rows):
        terminalreporter.write_line("[%s] criterion %2d: %s"
                                    % (tag, num, label))
