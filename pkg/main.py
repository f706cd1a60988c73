"""
FD Wiretap - прекодеры с выравниванием сигналов для полнодуплексного MIMO канала
с перехватчиком: таблицы S.D.o.F., развёртки Монте-Карло, проверка наклонов и GSVD
"""
import argparse
import csv
import json
import sys
import time
from typing import List, Optional

import numpy as np

from core.channel_model import NetworkConfig, gen_rayleigh
from core.config_manager import ConfigManager
from core.errors import ConfigError, FdWiretapError
from core.linalg import gsvd
from core.logger import setup_logger, get_log_file_path
from core.precoder import achieved_sdof, construct_precoders, subset_budgets, sum_sdof_closed_form
from core.rates import empirical_sdof
from core.sim_harness import REFERENCE_CONFIGS, csv_text, run_sweep, sdof_table, summary_json, write_csv

logger = setup_logger("FdWiretap")

GSVD_BOUND = 1e-10


def parse_net(text: str) -> NetworkConfig:
    """'na_t,na_r,nb_t,nb_r,ne' -> NetworkConfig"""
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"--net: ожидаются целые через запятую, получено '{text}'")
    if len(parts) != 5:
        raise ConfigError(f"--net: ожидается 5 чисел na_t,na_r,nb_t,nb_r,ne, получено '{text}'")
    return NetworkConfig(*parts)


def cmd_sdof(args, config: ConfigManager) -> int:
    """Таблица S.D.o.F. для набора конфигураций"""
    if args.config_file:
        configs = config.load_configs(args.config_file)
        labels = None
    elif args.net:
        configs = [parse_net(n) for n in args.net]
        labels = None
    else:
        labels = list(REFERENCE_CONFIGS)
        configs = list(REFERENCE_CONFIGS.values())
    seed = config.resolve_seed(cli_seed=args.seed)

    rows = sdof_table(configs, seed=seed, labels=labels)
    fields = ["label", "case", "closed", "total", "constructed", "constrained", "agree", "counts", "budget"]
    records = []
    for row in rows:
        records.append({
            "label": row.label,
            "case": row.case,
            "closed": "({},{})".format(*row.closed.as_tuple()),
            "total": row.total,
            "constructed": "({},{})".format(*row.constructed.as_tuple()),
            "constrained": "({},{})".format(*row.constrained.as_tuple()),
            "agree": row.agree,
            "counts": " ".join(f"{k}={v}" for k, v in row.counts.items()),
            "budget": " ".join(f"{k}={v}" for k, v in row.budget.items() if v),
        })
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
    finally:
        if args.out:
            out.close()
    return 0 if all(row.agree for row in rows) else 1


def cmd_sweep(args, config: ConfigManager) -> int:
    """Развёртка Монте-Карло по спецификации"""
    spec = config.load_spec(args.spec, {"runs": args.runs, "seed": args.seed})
    workers = args.workers if args.workers is not None else int(config.get_setting("workers", 1))
    started = time.monotonic()
    rows = run_sweep(spec, workers=workers)
    wall = time.monotonic() - started
    if args.out:
        write_csv(rows, args.out)
    else:
        sys.stdout.write(csv_text(rows))
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as f:
            json.dump(summary_json(spec, rows, wall), f, indent=2, ensure_ascii=False)
    return 0


def cmd_slope(args, config: ConfigManager) -> int:
    """Наклоны секретных скоростей на релеевской реализации"""
    net = parse_net(args.net)
    net = NetworkConfig(net.na_t, net.na_r, net.nb_t, net.nb_r, net.ne, rho=args.rho)
    seed = config.resolve_seed(cli_seed=args.seed)
    if args.points < 2:
        raise ConfigError("--points: нужно хотя бы 2 точки")
    channels = gen_rayleigh(net, seed)
    closed, total = sum_sdof_closed_form(subset_budgets(channels), net)
    base = construct_precoders(channels, net, constrained=args.constrained)
    achieved = achieved_sdof(channels, base)
    grid = list(np.linspace(args.p_min, args.p_max, args.points))
    slope_a, slope_b = empirical_sdof(channels, base.rescaled, grid, rho=args.rho)
    print(f"config       {net.label()}")
    print(f"closed-form  ({closed.ds_a},{closed.ds_b}) total {total}")
    print(f"achieved     ({achieved.ds_a},{achieved.ds_b})")
    print(f"slopes       ({slope_a:.3f},{slope_b:.3f})")
    return 0


def cmd_gsvd_check(args, config: ConfigManager) -> int:
    """Самопроверка GSVD на случайных парах матриц"""
    rng = np.random.default_rng(config.resolve_seed(cli_seed=args.seed))
    worst_rec = worst_norm = 0.0
    dim_failures = 0
    for _ in range(args.pairs):
        n, m, k = (int(v) for v in rng.integers(1, args.max_dim + 1, size=3))
        a = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        b = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        res = gsvd(a, b)
        kk = min(m + k, n)
        expected = (kk, kk - min(m, n), kk - min(k, n), max(min(m, n) + min(k, n) - n, 0))
        if res.dims != expected:
            dim_failures += 1
        worst_rec = max(worst_rec, res.reconstruction_error(a, b))
        worst_norm = max(worst_norm, res.normalization_error())
    print(f"pairs                 {args.pairs}")
    print(f"reconstruction error  {worst_rec:.3e}")
    print(f"normalization error   {worst_norm:.3e}")
    print(f"dimension mismatches  {dim_failures}")
    ok = worst_rec <= GSVD_BOUND and worst_norm <= GSVD_BOUND and dim_failures == 0
    return 0 if ok else 1


def cmd_settings(args, config: ConfigManager) -> int:
    """Показать или изменить пользовательские умолчания (runs, seed, workers)"""
    if args.set:
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set: ожидается ключ=значение, получено '{item}'")
            config.set_setting(key.strip(), value.strip())
        config.save_settings()
    for key in sorted(config.settings):
        print(f"{key} {config.settings[key]}")
    print(f"file {config.settings_file}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fd-wiretap",
        description="Прекодеры с выравниванием сигналов для FD MIMO канала с перехватчиком",
    )
    parser.add_argument("--settings-file", help="файл пользовательских умолчаний (по умолчанию ~/.fd_wiretap/settings.json)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sdof", help="таблица S.D.o.F. для конфигураций")
    p.add_argument("--config-file", help="JSON/YAML список конфигураций")
    p.add_argument("--net", action="append", help="na_t,na_r,nb_t,nb_r,ne (можно повторять)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="путь CSV (по умолчанию stdout)")
    p.set_defaults(handler=cmd_sdof)

    p = sub.add_parser("sweep", help="развёртка Монте-Карло")
    p.add_argument("spec", help="файл спецификации JSON/YAML")
    p.add_argument("--out", help="путь CSV (по умолчанию stdout)")
    p.add_argument("--summary", help="путь JSON-сводки")
    p.add_argument("--runs", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("slope", help="оценка S.D.o.F. по наклону")
    p.add_argument("--net", default="3,2,3,2,5")
    p.add_argument("--p-min", type=float, default=60.0)
    p.add_argument("--p-max", type=float, default=120.0)
    p.add_argument("--points", type=int, default=7)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_slope)

    p = sub.add_parser("gsvd-check", help="самопроверка GSVD")
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--max-dim", type=int, default=8)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_gsvd_check)

    p = sub.add_parser("settings", help="пользовательские умолчания runs, seed, workers")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="изменить и сохранить (можно повторять)")
    p.set_defaults(handler=cmd_settings)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Главная функция запуска"""
    args = build_parser().parse_args(argv)
    try:
        config = ConfigManager(args.settings_file)
        return args.handler(args, config)
    except ConfigError as e:
        logger.error(f"Ошибка конфигурации: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FdWiretapError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        print(f"error: {type(e).__name__}: {e} (лог: {get_log_file_path()})", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        logger.info("Прервано пользователем")
        return 130


if __name__ == "__main__":
    sys.exit(main())
