"""
A small instance validator for the JSON files lbforge reads back: instance descriptors and
sample files.

Schemas are plain dicts in a JSON-schema-like dialect: ``type``, ``format``, ``minimum``,
``maximum``, ``enum``, ``required``, ``properties`` and ``items``. Only what those files need is
supported, e.g.

1. Errors are raised one at a time
2. No ``$ref`` resolution, no ``additionalItems``, no ``oneOf``

Unknown object keys are tolerated with a warning so that newer files still load.
"""


__all__ = ["validate"]

import datetime
import math
import warnings
from functools import wraps

import rfc3339

from .excs import ValidationError


# ------- MAPPINGS -------#

JSON_PYTHON_TYPE_MAPPING = {
    "number": (float, int),
    "integer": (int,),
    "string": (str,),
    "object": (dict,),
    "array": (list, tuple),
    "boolean": (bool,),
}

KNOWN_FORMATS = ["decimal", "date-time"]

# ------ Helpers -------#


def make_validation_error_msg(checked_value, correct_criteria, schema_name=None):
    return f'Invalid instance "{str(schema_name)}": {checked_value!r} isn\'t valid. Expected a value that meets the following criteria: {correct_criteria}'


def handle_type_and_value_errors(fn):
    @wraps(fn)
    def wrapper(*args, schema_name=None):
        try:
            return fn(*args, schema_name=schema_name)
        except (ValueError, TypeError) as e:
            raise ValidationError(
                f"{e.__class__.__name__}: Value: {args[0]!r} Schema name: {schema_name} Validator's name: {fn.__name__} Error: {str(e)}"
            )

    return wrapper


# -------- VALIDATORS ---------#

# Type validators


@handle_type_and_value_errors
def array_validator(value, schema_name=None):
    req_types = JSON_PYTHON_TYPE_MAPPING["array"]
    if not isinstance(value, req_types):
        raise ValidationError(make_validation_error_msg(value, "array", schema_name))


@handle_type_and_value_errors
def boolean_validator(value, schema_name=None):
    if not isinstance(value, bool):
        raise ValidationError(make_validation_error_msg(value, "boolean", schema_name))


@handle_type_and_value_errors
def integer_validator(value, schema_name=None):
    # bool is an int subclass but never a valid count
    if isinstance(value, bool) or not isinstance(value, JSON_PYTHON_TYPE_MAPPING["integer"]):
        raise ValidationError(make_validation_error_msg(value, "integer", schema_name))


@handle_type_and_value_errors
def number_validator(value, schema_name=None):
    if isinstance(value, bool) or not isinstance(value, JSON_PYTHON_TYPE_MAPPING["number"]):
        raise ValidationError(make_validation_error_msg(value, "number", schema_name))


@handle_type_and_value_errors
def object_validator(value, schema_name=None):
    if not isinstance(value, JSON_PYTHON_TYPE_MAPPING["object"]):
        raise ValidationError(make_validation_error_msg(value, "object", schema_name))


@handle_type_and_value_errors
def string_validator(value, schema_name=None):
    if not isinstance(value, JSON_PYTHON_TYPE_MAPPING["string"]):
        raise ValidationError(make_validation_error_msg(value, "string", schema_name))


# Format validators


@handle_type_and_value_errors
def decimal_validator(value, schema_name=None):
    if not math.isfinite(float(value)):
        raise ValidationError(make_validation_error_msg(value, "Finite decimal string", schema_name))


@handle_type_and_value_errors
def datetime_validator(value, schema_name=None):
    msg = make_validation_error_msg(value, "RFC 3339 timestamp, e.g. 2026-01-01T00:00:00+00:00", schema_name)
    try:
        pvalue = rfc3339.parse_datetime(value)
    except Exception as e:
        raise ValidationError(f"{e} {msg}")
    if not isinstance(pvalue, datetime.datetime):
        raise ValidationError(msg)


# Other Validators


@handle_type_and_value_errors
def minimum_validator(value, minimum, schema_name=None):
    if float(value) < float(minimum):
        raise ValidationError(make_validation_error_msg(value, f"Not less than {minimum}", schema_name))


@handle_type_and_value_errors
def maximum_validator(value, maximum, schema_name=None):
    if float(value) > float(maximum):
        raise ValidationError(make_validation_error_msg(value, f"Not more than {maximum}", schema_name))


# -- Sub validators ---------------------------


def validate_type(instance, schema, schema_name=None):
    type_validator_name = schema["type"]
    # Check the name is known to avoid calling globals() maliciously
    if type_validator_name not in JSON_PYTHON_TYPE_MAPPING:
        warnings.warn(f"Unknown type: {type_validator_name} found. Skipping type checks for {schema_name}")
        return
    type_validator = globals()[type_validator_name + "_validator"]
    type_validator(instance, schema_name=schema_name)


def validate_format(instance, schema, schema_name=None):
    format_validator_name = schema.get("format")
    if format_validator_name is None:
        return
    if format_validator_name not in KNOWN_FORMATS:
        warnings.warn(f"Unknown format: {format_validator_name} found. Skipping format checks for {schema_name}")
        return
    if format_validator_name == "date-time":
        format_validator_name = "datetime"
    format_validator = globals()[format_validator_name + "_validator"]
    format_validator(instance, schema_name=schema_name)


def validate_range(instance, schema, schema_name=None):
    if schema.get("minimum") is not None:
        minimum_validator(instance, schema["minimum"], schema_name=schema_name)
    if schema.get("maximum") is not None:
        maximum_validator(instance, schema["maximum"], schema_name=schema_name)


def validate_enum(instance, schema, schema_name=None):
    choices = schema.get("enum")
    if choices is not None and instance not in choices:
        raise ValidationError(make_validation_error_msg(instance, f"One of {choices}", schema_name))


# -- Main Validator ---------------


def validate_all(instance, schema, schema_name=None):
    validate_type(instance, schema, schema_name)
    validate_format(instance, schema, schema_name)
    validate_range(instance, schema, schema_name)
    validate_enum(instance, schema, schema_name)


# -- API --------------------


def validate(instance, schema, schema_name=None):
    """
    Arguments:

        instance: Parsed JSON value to validate

        schema (dict): Schema to validate instance against

        schema_name (str): Name of the schema, used in error messages
    """

    def validate_object():
        object_validator(instance, schema_name=schema_name)
        props = schema.get("properties", {})

        for k in instance:
            if k not in props:
                warnings.warn(f"Item {k} was passed, but not mentioned in the schema of {schema_name}. It will be ignored")

        for k, v in props.items():
            if k not in instance:
                if v.get("required") is True:
                    raise ValidationError(f"Instance {k} is required in {schema_name}")
            else:
                validate(instance[k], v, schema_name=k)

    def validate_array():
        array_validator(instance, schema_name=schema_name)
        items = schema.get("items")
        if items is None:
            return
        for item in instance:
            validate(item, items, schema_name=schema_name)

    if not isinstance(schema, dict):
        raise TypeError("Schema must be a dict")
    if schema["type"] == "object":
        validate_object()
    elif schema["type"] == "array":
        validate_array()
    else:
        validate_all(instance, schema, schema_name)
