"""Service API and command line interface."""

from piqos.gateway.render import format_table, result_to_dict
from piqos.gateway.service import QosService, ServiceConfig, make_server, serve
