__name__ = "lbforge"
__about__ = "Moment-matched hard instances for monotonicity and log-concavity testing lower bounds"
__url__ = "https://github.com/lbforge/lbforge"
__version_info__ = ("0", "1", "0")
__version__ = ".".join(__version_info__)
__author__ = "lbforge contributors"
__author_email__ = "lbforge@users.noreply.github.com"
__maintainer__ = "lbforge contributors"
__license__ = "GNU"
__copyright__ = "(c) 2026 by lbforge contributors"
