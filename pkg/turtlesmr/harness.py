#!/usr/bin/env python

import argparse
import collections
import functools
import json
import logging
import os
import sys

from concurrent.futures import ProcessPoolExecutor

from tornado import gen
from tornado.ioloop import IOLoop
from tornado.log import enable_pretty_logging

from turtlesmr import netsim
from turtlesmr.checker import Spec, checkTrace, loadTrace
from turtlesmr.config import JsonConfig, ScenarioConfig
from turtlesmr.errors import ExitCode, InvariantError, TurtleError
from turtlesmr.util import installSignalHandler


# Command line entry point.
#
#   turtlesmr run   --config scenario.json [--seed N] [--out DIR] [--violate-model]
#   turtlesmr check trace.jsonl [--spec smr] [--spec turtle] ...
#   turtlesmr sweep --config scenario.json --seeds 0..999 [--parallel 4]
#
# Exit codes: 0 pass, 1 property violation or truncated run, 2 config
# error, 3 internal invariant error.


class Command(object):
    RUN = 'run'
    CHECK = 'check'
    SWEEP = 'sweep'


LOG_WROTE = 'Wrote {} records to {}'
LOG_TRUNCATED = 'Run truncated before quiescence: {}'
LOG_VIOLATION = 'Seed {} failed: {}'
LOG_SWEEP = 'Swept {} seeds, {} failed'


def outputDir(out=None, cfg=None):
    # --out, then the environment variable, then the configured default.

    cfg = cfg or JsonConfig()
    return out or os.environ.get(cfg.harness.outDirEnv) or cfg.harness.outDir


def tracePath(outDir, configPath, seed):
    stem = os.path.splitext(os.path.basename(configPath))[0]
    return os.path.join(outDir, '{}-seed{}.jsonl'.format(stem, seed))


def writeTrace(trace, path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w') as f:
        for line in trace.lines():
            f.write(line)
            f.write('\n')
    logging.info(LOG_WROTE.format(len(trace), path))


def scenarioOverrides(seed=None, violateModel=False):
    overrides = {}
    if seed is not None:
        overrides['seed'] = seed
    if violateModel:
        overrides['violateModel'] = True
    return overrides


def cliRun(configPath, seed=None, out=None, violateModel=False):
    # Returns (exit code, trace path). Config errors and internal invariant
    # errors propagate.

    scenario = ScenarioConfig.load(configPath, scenarioOverrides(seed, violateModel))
    trace = netsim.run(scenario)
    path = tracePath(outputDir(out), configPath, scenario.seed)
    writeTrace(trace, path)
    if trace.truncated:
        logging.warning(LOG_TRUNCATED.format(path))
        return ExitCode.VIOLATION, path
    return ExitCode.OK, path


def cliCheck(tracePath, specs=None):
    return checkTrace(loadTrace(tracePath), specs)


class SweepReport(object):
    # Aggregate of per seed results.

    def __init__(self, results):
        self.results = sorted(results, key=lambda r: r['seed'])

    @property
    def failingSeeds(self):
        return [r['seed'] for r in self.results if r['exitCode'] != ExitCode.OK]

    def failureCounts(self):
        counts = collections.Counter()
        for r in self.results:
            counts.update(r['failures'])
        return dict(counts)

    @property
    def exitCode(self):
        codes = set(r['exitCode'] for r in self.results)
        if ExitCode.INTERNAL in codes:
            return ExitCode.INTERNAL
        if ExitCode.VIOLATION in codes:
            return ExitCode.VIOLATION
        return ExitCode.OK

    def toDict(self):
        return {
            'seeds': len(self.results),
            'passed': len(self.results) - len(self.failingSeeds),
            'failing_seeds': self.failingSeeds,
            'failures': self.failureCounts(),
            'truncated': [r['seed'] for r in self.results if r['truncated']],
        }


def sweepSeed(configPath, seed, violateModel=False, outDir=None, specs=None):
    # Runs and checks one seed. Module level so it can be pickled into a
    # worker process. The trace is only written out when the seed fails.

    scenario = ScenarioConfig.load(configPath, scenarioOverrides(seed, violateModel))
    result = {'seed': seed, 'exitCode': ExitCode.OK, 'failures': [], 'truncated': False}
    try:
        trace = netsim.run(scenario)
    except InvariantError as e:
        logging.error(LOG_VIOLATION.format(seed, e))
        result.update(exitCode=ExitCode.INTERNAL, failures=['internal-invariant'])
        return result

    report = checkTrace(trace.records, specs)
    result['truncated'] = trace.truncated
    result['failures'] = report.failures()
    if trace.truncated:
        result['exitCode'] = ExitCode.VIOLATION
    elif report.exitCode != ExitCode.OK:
        result['exitCode'] = report.exitCode
    if result['exitCode'] != ExitCode.OK:
        logging.warning(LOG_VIOLATION.format(seed, result['failures'] or 'truncated'))
        if outDir:
            writeTrace(trace, tracePath(outDir, configPath, seed))
    return result


async def sweepParallel(jobs, parallelism):
    loop = IOLoop.current()
    with ProcessPoolExecutor(parallelism) as executor:
        return await gen.multi([loop.run_in_executor(executor, sweepSeed, *job) for job in jobs])


def cliSweep(configPath, seeds, parallelism=1, out=None, violateModel=False, specs=None):
    # Fails fast on an invalid config before any seed runs.

    ScenarioConfig.load(configPath, scenarioOverrides(None, violateModel))
    jobs = [(configPath, seed, violateModel, out, specs) for seed in seeds]
    if parallelism <= 1:
        results = [sweepSeed(*job) for job in jobs]
    else:
        ioloop = IOLoop()
        try:
            results = ioloop.run_sync(functools.partial(sweepParallel, jobs, parallelism))
        finally:
            ioloop.close()
    report = SweepReport(results)
    logging.info(LOG_SWEEP.format(len(report.results), len(report.failingSeeds)))
    return report


def seedRange(value):
    # "A..B" inclusive, or a single seed.

    start, sep, end = value.partition('..')
    try:
        first = int(start)
        last = int(end) if sep else first
    except ValueError:
        raise argparse.ArgumentTypeError('seeds must look like A..B, got {!r}'.format(value))
    if first < 0 or last < first:
        raise argparse.ArgumentTypeError('empty or negative seed range {!r}'.format(value))
    return range(first, last + 1)


def buildParser(cfg):
    parser = argparse.ArgumentParser(prog='turtlesmr',
        description='Simulate and check turtle based state machine replication')
    parser.add_argument('--log-level', type=int, default=cfg.general.logLevel)
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser(Command.RUN, help='simulate one scenario and write its trace')
    run.add_argument('--config', required=True)
    run.add_argument('--seed', type=int)
    run.add_argument('--out')
    run.add_argument('--violate-model', action='store_true')

    check = commands.add_parser(Command.CHECK, help='check the properties of a trace')
    check.add_argument('trace')
    check.add_argument('--spec', action='append', choices=Spec.ALL)

    sweep = commands.add_parser(Command.SWEEP, help='run and check a range of seeds')
    sweep.add_argument('--config', required=True)
    sweep.add_argument('--seeds', type=seedRange, required=True)
    sweep.add_argument('--parallel', type=int, default=cfg.harness.parallelism)
    sweep.add_argument('--out')
    sweep.add_argument('--spec', action='append', choices=Spec.ALL)
    sweep.add_argument('--violate-model', action='store_true')
    return parser


def dispatch(args, cfg):
    if args.command == Command.RUN:
        exitCode, path = cliRun(args.config, args.seed, outputDir(args.out, cfg),
            args.violate_model)
        print(path)
        return exitCode
    if args.command == Command.CHECK:
        report = cliCheck(args.trace, args.spec)
        print(json.dumps(report.toDict(), sort_keys=True, indent=2))
        return report.exitCode
    report = cliSweep(args.config, args.seeds, args.parallel, args.out, args.violate_model,
        args.spec)
    print(json.dumps(report.toDict(), sort_keys=True, indent=2))
    return report.exitCode


def main(argv=None):
    installSignalHandler()

    cfg = JsonConfig()
    args = buildParser(cfg).parse_args(argv)

    enable_pretty_logging()
    logger = logging.getLogger('')
    logger.setLevel(args.log_level)

    try:
        return dispatch(args, cfg)
    except TurtleError as e:
        logging.error(str(e))
        return e.exitCode


if __name__ == '__main__':
    sys.exit(main())
