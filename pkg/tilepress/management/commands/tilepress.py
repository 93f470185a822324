import logging

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

from tilepress.commands import COMMANDS, Artifacts, run_command
from tilepress.config import RunConfig
from tilepress.exceptions import CapacityError, TilepressError
from tilepress.export import dumps
from tilepress.pillow import Potential
from tilepress.verify import GROUPS, verify

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_FAILURE = 4
LOG_LEVELS = {0: logging.ERROR, 1: logging.WARNING, 2: logging.INFO, 3: logging.DEBUG}


class Command(BaseCommand):
    help = "Run a tilepress computation or the verification suite on a JSON configuration."

    def add_arguments(self, parser):
        parser.add_argument("subcommand", choices=sorted(COMMANDS) + ["verify"])
        parser.add_argument("--config", required=True, help="Path to the JSON run configuration.")
        parser.add_argument("--out", help="Output directory (overrides output.directory).")
        parser.add_argument("--threads", type=int, help="Worker threads for independent solves.")
        parser.add_argument("--n-max", type=int, dest="n_max", help="Overrides levels.n_max.")
        parser.add_argument(
            "--only",
            action="append",
            default=[],
            help="verify: run only these checks or groups ({0}).".format(", ".join(GROUPS)),
        )
        parser.add_argument(
            "--inject-discontinuity",
            type=float,
            dest="inject_discontinuity",
            help="verify: add a face-signed constant of this size to the potential, "
            "which breaks the gluing.",
        )

    def handle(self, *args, **options):
        level = LOG_LEVELS.get(options["verbosity"], logging.DEBUG)
        logging.getLogger("tilepress").setLevel(level)
        try:
            config = RunConfig.load(options["config"]).with_overrides(n_max=options["n_max"])
        except OSError as e:
            message = "Cannot read {0}: {1}".format(options["config"], e)
            raise CommandError(message, returncode=EXIT_CONFIG)
        except ImproperlyConfigured as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)

        try:
            if options["subcommand"] == "verify":
                summary = self.verify(config, options)
            else:
                summary, artifacts = run_command(
                    options["subcommand"], config, options["out"], options["threads"]
                )
                logger.info("%s wrote %d files", options["subcommand"], len(artifacts.written))
        except ImproperlyConfigured as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)
        except CapacityError as e:
            raise CommandError(str(e), returncode=EXIT_CAPACITY)
        except TilepressError as e:
            raise CommandError("{0}: {1}".format(type(e).__name__, e), returncode=EXIT_FAILURE)
        self.stdout.write(dumps(summary))

    def verify(self, config, options):
        potential = None
        if options["inject_discontinuity"] is not None:
            coefficients = config.potential_object().as_mapping()
            coefficients["signed_const"] = options["inject_discontinuity"]
            potential = Potential.from_mapping(
                coefficients, kappa=config.potential["kappa"], allow_discontinuous=True
            )
        report = verify(config, only=options["only"], potential=potential)
        directory = options["out"] or config.output["directory"]
        Artifacts(directory, config.output["formats"]).json("verify.json", report.as_dict())
        if not report.ok:
            self.stdout.write(dumps(report.as_dict()))
            raise CommandError(
                "Verification failed: {0}".format(
                    ", ".join(result.name for result in report.failures)
                ),
                returncode=EXIT_FAILURE,
            )
        return report.as_dict()
