"""Compare the cost of an in-place reorganization with two baselines.

Runs the bundled scenarios and prints, per scenario, the reorganization gas,
the gas to initialise the same state in an empty contract, and the gas for a
redeploy-and-copy migration.
"""

from inplace_upgrade.scenario import bundled_scenarios, gas_report

report = gas_report(bundled_scenarios())
print(f"{'':<5}{'vars':>5}{'plan':>6}{'reorg':>10}{'fresh':>10}{'migrate':>10}{'overhead':>10}")
for r in report.rows:
    print(
        f"{r['scenario']:<5}{r['n_vars']:>5}{r['n_reorgs']:>6}{r['reorg_gas']:>10}"
        f"{r['fresh_init_gas']:>10}{r['migration_gas']:>10}{r['overhead_percent']:>9.2f}%"
    )
print()
print(report.render_summary(), end="")
